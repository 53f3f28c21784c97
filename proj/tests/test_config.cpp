#include <cmath>

#include "config.hpp"
#include "doctest.h"
#include "error.hpp"

using namespace mapos;
using namespace mapos::cfg;

TEST_CASE("defaults reproduce the headline scenario parameters") {
    RunConfig c = default_config();
    CHECK(c.scenario.antennas == 9);
    CHECK(c.scenario.frequency_ghz == doctest::Approx(28.0));
    CHECK(std::abs(c.scenario.wavelength - 0.0107) < 1e-4);
    CHECK(c.scenario.noise_w == doctest::Approx(1e-5));
    CHECK(c.scenario.power_w == doctest::Approx(1.0));
    CHECK(c.swarm.particles == 50);
    CHECK(c.scenario.d_min_ma == doctest::Approx(c.scenario.wavelength / 2.0));
    CHECK(c.eval.accuracy_eps == doctest::Approx(0.0005));
    CHECK(c.model.learning_rate == doctest::Approx(0.001));
    CHECK(c.scenario.bs_height == doctest::Approx(20.0));
    // movement box spans 10 wavelengths per axis, centered at the BS
    Vec3 ext = c.scenario.box.extent();
    CHECK(ext.x == doctest::Approx(10.0 * c.scenario.wavelength));
    CHECK(c.scenario.box.center().z == doctest::Approx(20.0));
}

TEST_CASE("unknown key errors name the nearest valid key") {
    try {
        parse_config_text("[swarm]\npartcles = 20\n", "bad.ini");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Config);
        std::string msg = e.what();
        CHECK(msg.find("bad.ini:2") != std::string::npos);
        CHECK(msg.find("swarm.partcles") != std::string::npos);
        CHECK(msg.find("swarm.particles") != std::string::npos);
    }
}

TEST_CASE("value errors cite the line and key") {
    try {
        parse_config_text("[scenario]\nnoise_w = loud\n", "cfg.ini");
        FAIL("expected a config error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("cfg.ini:2") != std::string::npos);
        CHECK(msg.find("scenario.noise_w") != std::string::npos);
    }
}

TEST_CASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(parse_config_text("[run]\nseed = 1\nseed = 2\n"), Error);
}

TEST_CASE("wavelength consistency check against the carrier frequency") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[scenario]\nfrequency_ghz = 28\nwavelength_m = 0.02\n"),
        doctest::Contains("inconsistent"), Error);
    RunConfig ok =
        parse_config_text("[scenario]\nfrequency_ghz = 28\nwavelength_m = 0.0107\n");
    CHECK(ok.scenario.wavelength == doctest::Approx(0.0107));
}

TEST_CASE("config snapshot round-trips") {
    RunConfig c = default_config();
    c.seed = 31337;
    c.scenario.alpha = 3.1;
    c.model.kind = ModelKind::Narx;
    c.eval.horizons = {5, 15};
    auto kv = config_snapshot(c);
    RunConfig back = config_from_snapshot(kv);
    CHECK(back.seed == 31337);
    CHECK(back.scenario.alpha == doctest::Approx(3.1));
    CHECK(back.model.kind == ModelKind::Narx);
    REQUIRE(back.eval.horizons.size() == 2);
    CHECK(back.eval.horizons[1] == 15);
    CHECK(back.scenario.box.lo.x == doctest::Approx(c.scenario.box.lo.x));
    // a second snapshot of the reconstructed config is textually identical
    CHECK(config_snapshot(back) == kv);
}

TEST_CASE("validation rejects inconsistent model sizes") {
    CHECK_THROWS_WITH_AS(parse_config_text("[model]\nd_model = 30\nheads = 4\n"),
                         doctest::Contains("divisible"), Error);
    CHECK_THROWS_AS(parse_config_text("[model]\ndropout = 1.0\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[swarm]\nomega_max = 0.1\nomega_min = 0.5\n"), Error);
}

TEST_CASE("comments and blank lines are ignored") {
    RunConfig c = parse_config_text("# preamble\n\n[run]\nseed = 5 # trailing\n");
    CHECK(c.seed == 5);
}
