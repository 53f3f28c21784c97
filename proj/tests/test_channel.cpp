#include <cmath>
#include <complex>

#include "channel.hpp"
#include "doctest.h"
#include "error.hpp"
#include "rng.hpp"

using namespace mapos;
using namespace mapos::channel;

namespace {
constexpr double kLambda = 0.0107;

PathSet single_los(double theta, double phi) {
    PathSet ps;
    ps.los_count = 1;
    ps.angles.push_back({theta, phi});
    return ps;
}
} // namespace

TEST_CASE("direction_vector axis cases") {
    Vec3 a = direction_vector(0.0, 0.0);
    CHECK(a.x == doctest::Approx(1.0));
    CHECK(a.y == doctest::Approx(0.0));
    CHECK(a.z == doctest::Approx(0.0));
    Vec3 b = direction_vector(M_PI / 2.0, 0.0);
    CHECK(b.z == doctest::Approx(1.0));
    CHECK(std::abs(b.x) < 1e-12);
    Vec3 c = direction_vector(0.0, M_PI / 2.0);
    CHECK(c.y == doctest::Approx(1.0));
}

TEST_CASE("direction_vector is unit norm for random angles") {
    Rng r(11);
    for (int i = 0; i < 200; ++i) {
        double theta = r.uniform(-M_PI / 2, M_PI / 2);
        double phi = r.uniform(-M_PI, M_PI);
        CHECK(std::abs(direction_vector(theta, phi).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("steering_vector phase cases") {
    PathSet ps = single_los(0.0, 0.0); // r = (1,0,0)
    auto at = [&](double x) {
        return steering_vector(Vec3{x, 0, 0}, ps, kLambda)[0];
    };
    CHECK(std::abs(at(0.0) - cplx{1, 0}) < 1e-12);
    CHECK(std::abs(at(kLambda / 2.0) - cplx{-1, 0}) < 1e-12);
    CHECK(std::abs(at(kLambda / 4.0) - cplx{0, 1}) < 1e-12);
}

TEST_CASE("steering entries always unit magnitude") {
    Rng r(12);
    for (int i = 0; i < 50; ++i) {
        PathSet ps = sample_nlos_paths(r, 6);
        Vec3 p{r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1)};
        for (const auto& e : steering_vector(p, ps, kLambda))
            CHECK(std::abs(std::abs(e) - 1.0) < 1e-12);
    }
}

TEST_CASE("field_response_matrix composition") {
    PathSet ps = single_los(0.0, 0.0);
    ArrayLayout two;
    two.positions = {Vec3{0, 0, 0}, Vec3{kLambda / 2.0, 0, 0}};
    cmat g = field_response_matrix(two, ps, kLambda);
    REQUIRE(g.size() == 1);
    REQUIRE(g[0].size() == 2);
    CHECK(std::abs(g[0][0] - cplx{1, 0}) < 1e-12);
    CHECK(std::abs(g[0][1] - cplx{-1, 0}) < 1e-12);

    ArrayLayout origin;
    origin.positions = {Vec3{}, Vec3{}, Vec3{}};
    cmat ones = field_response_matrix(origin, ps, kLambda);
    for (const auto& row : ones)
        for (const auto& e : row) CHECK(std::abs(e - cplx{1, 0}) < 1e-12);
}

TEST_CASE("sample_nlos_paths basics") {
    Rng r(13);
    CHECK(sample_nlos_paths(r, 0).angles.empty());

    Rng a(99), b(99);
    PathSet pa = sample_nlos_paths(a, 4);
    PathSet pb = sample_nlos_paths(b, 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(pa.angles[i].theta == pb.angles[i].theta);
        CHECK(pa.angles[i].phi == pb.angles[i].phi);
    }

    // law of large numbers on the elevation distribution
    Rng big(7);
    PathSet many = sample_nlos_paths(big, 100000);
    double mean_theta = 0.0;
    for (const auto& ang : many.angles) {
        CHECK(ang.theta >= -M_PI / 2);
        CHECK(ang.theta <= M_PI / 2);
        CHECK(ang.phi >= -M_PI);
        CHECK(ang.phi <= M_PI);
        mean_theta += ang.theta;
    }
    mean_theta /= 100000.0;
    CHECK(std::abs(mean_theta) < 0.02);
}

TEST_CASE("sample_channel pure LoS limits") {
    LinkBudget budget;
    budget.rician_kappa = 1e12;
    budget.wavelength = kLambda;
    Vec3 ref{0, 0, 0};
    NodeState node{Vec3{1, 0, 0}, NodeRole::Bob};
    PathSet ps = single_los(0.0, 0.0);

    ArrayLayout one;
    one.positions = {Vec3{0, 0, 0}};
    Rng r(1);
    cvec h = sample_channel(one, node, ps, budget, 2.0, 1.0, ref, r);
    REQUIRE(h.size() == 1);
    CHECK(std::abs(h[0] - cplx{1, 0}) < 1e-5);

    one.positions = {Vec3{kLambda / 2.0, 0, 0}};
    Rng r2(1);
    cvec h2 = sample_channel(one, node, ps, budget, 2.0, 1.0, ref, r2);
    CHECK(std::abs(h2[0] - cplx{-1, 0}) < 1e-5);
}

TEST_CASE("kappa 0 ignores the LoS geometry entirely") {
    LinkBudget budget;
    budget.rician_kappa = 0.0;
    budget.wavelength = kLambda;
    Vec3 ref{0, 0, 0};
    NodeState node{Vec3{5, 3, 4}, NodeRole::Bob};
    ArrayLayout layout;
    layout.positions = {Vec3{0, 0, 0}, Vec3{0.002, 0.001, 0}};

    PathSet a = single_los(0.1, 0.2);
    PathSet b = single_los(-0.7, 1.1);
    Rng nlos_rng(5);
    PathSet scatter = sample_nlos_paths(nlos_rng, 3);
    for (auto& ps : {&a, &b}) {
        ps->nlos_count = 3;
        ps->angles.insert(ps->angles.end(), scatter.angles.begin(), scatter.angles.end());
    }

    Rng ra(500), rb(500);
    cvec ha = sample_channel(layout, node, a, budget, 2.5, 1e-3, ref, ra);
    cvec hb = sample_channel(layout, node, b, budget, 2.5, 1e-3, ref, rb);
    for (std::size_t i = 0; i < ha.size(); ++i) CHECK(std::abs(ha[i] - hb[i]) < 1e-15);
}

TEST_CASE("sample_channel rejects collocated nodes") {
    LinkBudget budget;
    Vec3 ref{0, 0, 0};
    NodeState node{ref, NodeRole::Eve};
    ArrayLayout one;
    one.positions = {Vec3{}};
    PathSet ps = single_los(0, 0);
    Rng r(1);
    CHECK_THROWS_AS(sample_channel(one, node, ps, budget, 2.0, 1.0, ref, r), mapos::Error);
}

TEST_CASE("snr arithmetic") {
    CHECK(snr({cplx{1, 0}}, {cplx{1, 0}}, 1e-5) == doctest::Approx(1e5));

    cvec h{cplx{1, 0}, cplx{0, 1}};
    cvec w{cplx{1, 0}, cplx{0, 1}};
    CHECK(snr(h, w, 1.0) == doctest::Approx(4.0)); // |1 + (-i)(i)|^2 = 4

    cvec h2{cplx{1, 0}, cplx{1, 0}};
    cvec w2{cplx{1, 0}, cplx{-1, 0}};
    CHECK(snr(h2, w2, 1.0) == doctest::Approx(0.0));

    cvec h9(9, cplx{1, 0});
    cvec w9 = equal_power_weights(9, 1.0);
    CHECK(snr(h9, w9, 1e-5) == doctest::Approx(9e5));
}

TEST_CASE("snr invariant under global phase rotation") {
    Rng r(21);
    for (int trial = 0; trial < 50; ++trial) {
        cvec h(4), w(4);
        for (int i = 0; i < 4; ++i) {
            h[i] = {r.normal(), r.normal()};
            w[i] = {r.normal(), r.normal()};
        }
        cplx ph = std::polar(1.0, r.uniform(-M_PI, M_PI));
        cplx pw = std::polar(1.0, r.uniform(-M_PI, M_PI));
        cvec h2 = h, w2 = w;
        for (int i = 0; i < 4; ++i) {
            h2[i] *= ph;
            w2[i] *= pw;
        }
        CHECK(std::abs(std::sqrt(snr(h, w, 1.0)) - std::sqrt(snr(h2, w2, 1.0))) < 1e-12);
    }
}

TEST_CASE("secrecy_rate clamp and monotonicity") {
    CHECK(secrecy_rate(3.0, 1.0) == doctest::Approx(1.0));
    CHECK(secrecy_rate(2.5, 2.5) == 0.0);
    CHECK(secrecy_rate(1.0, 3.0) == 0.0);

    double prev = -1.0;
    for (double gb = 0.0; gb <= 10.0; gb += 0.5) {
        double v = secrecy_rate(gb, 1.0);
        CHECK(v >= prev);
        prev = v;
    }
    prev = 1e9;
    for (double ge = 0.0; ge <= 10.0; ge += 0.5) {
        double v = secrecy_rate(5.0, ge);
        CHECK(v <= prev);
        prev = v;
    }
}

namespace {
struct ReplaySetup {
    ArrayLayout layout;
    NodeState bob{Vec3{15, 2, 24}, NodeRole::Bob};
    NodeState eve{Vec3{60, -9, 31}, NodeRole::Eve};
    LinkBudget budget;
    ChannelScenario scen;

    ReplaySetup() {
        layout.positions = {Vec3{0, 0, 20}, Vec3{0.005, 0.002, 20}, Vec3{-0.004, 0.004, 20.003}};
        budget.wavelength = kLambda;
        scen.alpha = 2.5;
        scen.beta0 = 1e-3;
        scen.los_paths = 1;
        scen.nlos_paths = 4;
        scen.array_ref = Vec3{0, 0, 20};
    }
};
} // namespace

TEST_CASE("expected_secrecy_rate deterministic given seed") {
    ReplaySetup s;
    Rng a(77), b(77);
    double ra = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, 32, a);
    double rb = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, 32, b);
    CHECK(ra == rb);
}

TEST_CASE("expected_secrecy_rate with no NLoS equals one direct evaluation") {
    ReplaySetup s;
    s.scen.nlos_paths = 0;
    Rng a(1), b(2);
    double r1 = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, 1, a);
    double r2 = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, 10000, b);
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-14));

    // direct single evaluation oracle
    PathSet bp, ep;
    bp.los_count = ep.los_count = 1;
    bp.angles.push_back(los_angles(s.scen.array_ref, s.bob.position));
    ep.angles.push_back(los_angles(s.scen.array_ref, s.eve.position));
    Rng r(3);
    cvec hb = sample_channel(s.layout, s.bob, bp, s.budget, s.scen.alpha, s.scen.beta0,
                             s.scen.array_ref, r);
    cvec he = sample_channel(s.layout, s.eve, ep, s.budget, s.scen.alpha, s.scen.beta0,
                             s.scen.array_ref, r);
    cvec w = equal_power_weights(s.layout.size(), s.budget.tx_power);
    double direct = secrecy_rate(snr(hb, w, s.budget.noise_power),
                                 snr(he, w, s.budget.noise_power));
    CHECK(r1 == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("Monte Carlo means from independent seeds agree within 3 standard errors") {
    ReplaySetup s;
    const int n = 10000;
    Rng a(1001), b(2002);
    double ma = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, n, a);
    double mb = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, n, b);

    // estimate the per-draw standard deviation with single-draw evaluations
    const int probe = 2000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < probe; ++i) {
        Rng r = Rng::substream(31337, {static_cast<std::uint64_t>(i)});
        double v = expected_secrecy_rate(s.layout, s.bob, s.eve, s.budget, s.scen, 1, r);
        sum += v;
        sq += v * v;
    }
    double mean = sum / probe;
    double sd = std::sqrt(std::max(0.0, sq / probe - mean * mean));
    double se = sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(ma - mb) < 3.0 * se * std::sqrt(2.0));
}

TEST_CASE("array_pattern_gain reference cases") {
    ArrayLayout collapsed;
    collapsed.positions.assign(5, Vec3{});
    cvec w = equal_power_weights(5, 1.0);
    for (double phi = -3.0; phi <= 3.0; phi += 0.7)
        CHECK(array_pattern_gain(collapsed, w, 0.3, phi, kLambda) == doctest::Approx(5.0));

    ArrayLayout single;
    single.positions = {Vec3{0.01, -0.02, 0.4}};
    cvec w1{cplx{0.6, 0.8}};
    CHECK(array_pattern_gain(single, w1, 0.1, 0.2, kLambda) == doctest::Approx(1.0));

    // broadside half-wavelength pair nulls at endfire
    ArrayLayout pair;
    pair.positions = {Vec3{0, 0, 0}, Vec3{kLambda / 2.0, 0, 0}};
    cvec we = equal_power_weights(2, 1.0);
    CHECK(array_pattern_gain(pair, we, 0.0, 0.0, kLambda) < 1e-12);
}

TEST_CASE("pattern gain is invariant to rigid array translation") {
    Rng r(23);
    ArrayLayout a;
    for (int i = 0; i < 6; ++i)
        a.positions.push_back({r.uniform(-0.05, 0.05), r.uniform(-0.05, 0.05),
                               r.uniform(-0.05, 0.05)});
    ArrayLayout b = a;
    Vec3 shift{1.234, -0.777, 0.5};
    for (auto& p : b.positions) p += shift;
    cvec w(6);
    for (auto& x : w) x = {r.normal(), r.normal()};
    for (int i = 0; i < 20; ++i) {
        double theta = r.uniform(-M_PI / 2, M_PI / 2);
        double phi = r.uniform(-M_PI, M_PI);
        double ga = array_pattern_gain(a, w, theta, phi, kLambda);
        double gb = array_pattern_gain(b, w, theta, phi, kLambda);
        CHECK(ga == doctest::Approx(gb).epsilon(1e-9));
    }
}

TEST_CASE("mrt_weights normalization and optimality") {
    cvec h{cplx{1, 0}, cplx{0, 0}};
    cvec w = mrt_weights(h, 1.0);
    CHECK(std::abs(w[0] - cplx{1, 0}) < 1e-12);
    CHECK(std::abs(w[1]) < 1e-12);

    cvec h2{cplx{1, 0}, cplx{0, 1}};
    cvec w2 = mrt_weights(h2, 2.0);
    CHECK(std::abs(w2[0] - cplx{1, 0}) < 1e-12);
    CHECK(std::abs(w2[1] - cplx{0, 1}) < 1e-12);

    Rng r(29);
    cvec h3(4);
    for (auto& x : h3) x = {r.normal(), r.normal()};
    double p = 1.7;
    cvec wm = mrt_weights(h3, p);
    double norm_sq = 0.0, h_norm_sq = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        norm_sq += std::norm(wm[i]);
        h_norm_sq += std::norm(h3[i]);
    }
    CHECK(norm_sq == doctest::Approx(p).epsilon(1e-12));
    double best = snr(h3, wm, 1.0);
    CHECK(best == doctest::Approx(p * h_norm_sq).epsilon(1e-12));
    for (int trial = 0; trial < 100; ++trial) {
        cvec w_alt(4);
        double s = 0.0;
        for (auto& x : w_alt) {
            x = {r.normal(), r.normal()};
            s += std::norm(x);
        }
        double scale = std::sqrt(p / s);
        for (auto& x : w_alt) x *= scale;
        CHECK(snr(h3, w_alt, 1.0) <= best + 1e-10);
    }

    CHECK_THROWS_AS(mrt_weights(cvec{cplx{0, 0}}, 1.0), mapos::Error);
}

TEST_CASE("fixed grid layout is half-wavelength spaced and centered") {
    Box box{Vec3{-0.0535, -0.0535, 19.9465}, Vec3{0.0535, 0.0535, 20.0535}};
    ArrayLayout g = channel::fixed_grid_layout(9, kLambda, box);
    REQUIRE(g.size() == 9);
    CHECK(g.min_pairwise_distance() == doctest::Approx(kLambda / 2.0));
    Vec3 mean{};
    for (const auto& p : g.positions) mean += p;
    mean = mean * (1.0 / 9.0);
    CHECK(mean.x == doctest::Approx(0.0));
    CHECK(mean.y == doctest::Approx(0.0));
    CHECK(mean.z == doctest::Approx(20.0));
    for (const auto& p : g.positions) CHECK(box.contains(p));
}
