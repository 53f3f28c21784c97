#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "pso.hpp"

using namespace mapos;
using namespace mapos::pso;

namespace {

SwarmConfig basic_config(std::size_t antennas, int particles, int iterations) {
    SwarmConfig cfg;
    cfg.particles = particles;
    cfg.iterations = iterations;
    cfg.antennas = antennas;
    cfg.bounds = Box{Vec3{0, 0, 0}, Vec3{1, 1, 1}};
    cfg.d_min_ma = 0.0;
    cfg.d_max_slot = 1.0;
    cfg.seed = 4242;
    return cfg;
}

FitnessFn sphere_fitness(const std::vector<double>& target) {
    return [target](const ArrayLayout& l) {
        std::vector<double> q = flatten(l);
        double acc = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            double d = q[i] - target[i];
            acc -= d * d;
        }
        return acc;
    };
}

} // namespace

TEST_CASE("inertia schedule endpoints and midpoint") {
    SwarmConfig cfg = basic_config(1, 10, 100);
    cfg.omega_max = 0.9;
    cfg.omega_min = 0.4;
    CHECK(inertia(0, cfg) == doctest::Approx(0.9));
    CHECK(inertia(100, cfg) == doctest::Approx(0.4));
    CHECK(inertia(50, cfg) == doctest::Approx(0.65));
}

TEST_CASE("velocity update aligns with the hand formula") {
    SwarmConfig cfg = basic_config(1, 1, 1);
    Particle p;
    p.q = {0.0, 0.0, 0.0};
    p.v = {2.0, -1.0, 0.5};
    p.pbest_q = {1.0, 0.0, 0.0};
    std::vector<double> gbest{3.0, 0.0, 0.0};

    SUBCASE("no attraction leaves velocity scaled by omega only") {
        cfg.c1 = cfg.c2 = 0.0;
        Rng r(1);
        auto v = update_velocity(p, gbest, 1.0, cfg, r);
        CHECK(v[0] == doctest::Approx(2.0));
        CHECK(v[1] == doctest::Approx(-1.0));
        CHECK(v[2] == doctest::Approx(0.5));
    }

    SUBCASE("at pbest == gbest == q only inertia remains") {
        cfg.c1 = cfg.c2 = 1.7;
        Particle still = p;
        still.pbest_q = still.q;
        Rng r(2);
        auto v = update_velocity(still, still.q, 0.25, cfg, r);
        for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(0.25 * p.v[i]));
    }

    SUBCASE("formula reproduced with replicated random draws") {
        cfg.c1 = cfg.c2 = 1.0;
        Rng r(77), mirror(77);
        double s1 = mirror.uniform01();
        double s2 = mirror.uniform01();
        auto v = update_velocity(p, gbest, 0.5, cfg, r);
        for (int i = 0; i < 3; ++i) {
            double expect = 0.5 * p.v[i] + s1 * (p.pbest_q[i] - p.q[i]) +
                            s2 * (gbest[i] - p.q[i]);
            CHECK(v[i] == doctest::Approx(expect).epsilon(1e-15));
        }
    }
}

TEST_CASE("position update projection rules") {
    SwarmConfig cfg = basic_config(1, 1, 1);
    long resamples = 0;

    SUBCASE("interior move is exact") {
        Particle p;
        p.q = {0.5, 0.5, 0.5};
        p.v = {0, 0, 0};
        p.pbest_q = p.q;
        Rng r(3);
        apply_position_update(p, {0.1, -0.2, 0.05}, cfg, nullptr, r, &resamples);
        CHECK(p.q[0] == doctest::Approx(0.6));
        CHECK(p.q[1] == doctest::Approx(0.3));
        CHECK(p.q[2] == doctest::Approx(0.55));
    }

    SUBCASE("outward move clamps to the face and zeroes that velocity component") {
        Particle p;
        p.q = {1.0, 0.5, 0.5};
        p.v = {0, 0, 0};
        p.pbest_q = p.q;
        Rng r(4);
        apply_position_update(p, {0.3, 0.1, 0.0}, cfg, nullptr, r, &resamples);
        CHECK(p.q[0] == doctest::Approx(1.0));
        CHECK(p.v[0] == 0.0);
        CHECK(p.q[1] == doctest::Approx(0.6));
        CHECK(p.v[1] == doctest::Approx(0.1));
    }

    SUBCASE("step cap truncates radially toward the previous position") {
        cfg.d_max_slot = 0.1;
        ArrayLayout prev;
        prev.positions = {Vec3{0.5, 0.5, 0.5}};
        Particle p;
        p.q = {0.5, 0.5, 0.5};
        p.v = {0, 0, 0};
        p.pbest_q = p.q;
        Rng r(5);
        apply_position_update(p, {0.2, 0.0, 0.0}, cfg, &prev, r, &resamples);
        CHECK(p.q[0] == doctest::Approx(0.6));
        CHECK(p.q[1] == doctest::Approx(0.5));
        CHECK(p.q[2] == doctest::Approx(0.5));
    }
}

TEST_CASE("init swarm determinism and spacing feasibility") {
    SwarmConfig cfg = basic_config(9, 50, 0);
    cfg.bounds = Box{Vec3{-0.0535, -0.0535, 19.9465}, Vec3{0.0535, 0.0535, 20.0535}};
    cfg.d_min_ma = 0.00535;
    FitnessFn f = [](const ArrayLayout& l) { return l.positions[0].x; };

    SwarmState a = init_swarm(cfg, nullptr, nullptr, f);
    SwarmState b = init_swarm(cfg, nullptr, nullptr, f);
    REQUIRE(a.particles.size() == 50);
    CHECK(a.gbest_fit == b.gbest_fit);
    for (std::size_t k = 0; k < a.particles.size(); ++k) {
        CHECK(a.particles[k].q == b.particles[k].q);
        ArrayLayout l = unflatten(a.particles[k].q);
        CHECK(l.min_pairwise_distance() >= cfg.d_min_ma - 1e-9);
        for (const auto& p : l.positions) CHECK(cfg.bounds.contains(p, 1e-12));
    }
}

TEST_CASE("swarm init reports unsatisfiable spacing with the violated pair") {
    SwarmConfig cfg = basic_config(2, 3, 0);
    cfg.bounds = Box{Vec3{0, 0, 0}, Vec3{1e-4, 1e-4, 1e-4}};
    cfg.d_min_ma = 0.5; // impossible inside a 0.1 mm box
    FitnessFn f = [](const ArrayLayout&) { return 0.0; };
    CHECK_THROWS_WITH_AS(init_swarm(cfg, nullptr, nullptr, f),
                         doctest::Contains("antennas 0 and 1"), mapos::Error);
}

TEST_CASE("zero iterations returns the best initial sample") {
    SwarmConfig cfg = basic_config(2, 30, 0);
    std::vector<double> target(6, 0.25);
    FitnessFn f = sphere_fitness(target);
    SlotResult res = optimize_slot(f, cfg);
    CHECK(res.history.size() == 1);
    SwarmState st = init_swarm(cfg, nullptr, nullptr, f);
    CHECK(res.fit == st.gbest_fit);
}

TEST_CASE("single particle, zero iterations returns the lone sample") {
    SwarmConfig cfg = basic_config(1, 1, 0);
    FitnessFn f = sphere_fitness({0.5, 0.5, 0.5});
    SlotResult res = optimize_slot(f, cfg);
    SwarmState st = init_swarm(cfg, nullptr, nullptr, f);
    CHECK(res.layout.positions[0].x == st.particles[0].q[0]);
}

TEST_CASE("sphere optimum recovered within 1e-3 per coordinate") {
    SwarmConfig cfg = basic_config(9, 50, 100);
    std::vector<double> target(27);
    Rng tr(9001);
    for (auto& t : target) t = tr.uniform(0.2, 0.8);
    SlotResult res = optimize_slot(sphere_fitness(target), cfg);
    std::vector<double> q = flatten(res.layout);
    for (std::size_t i = 0; i < q.size(); ++i)
        CHECK(std::abs(q[i] - target[i]) < 1e-3);
}

TEST_CASE("same seed gives bit-identical runs, threads included") {
    SwarmConfig cfg = basic_config(3, 20, 30);
    std::vector<double> target(9, 0.4);
    FitnessFn f = sphere_fitness(target);
    SlotResult a = optimize_slot(f, cfg);
    SlotResult b = optimize_slot(f, cfg);
    CHECK(a.history == b.history);
    CHECK(flatten(a.layout) == flatten(b.layout));

    cfg.threads = 4;
    SlotResult c = optimize_slot(f, cfg);
    CHECK(a.history == c.history);
    CHECK(flatten(a.layout) == flatten(c.layout));
}

TEST_CASE("gbest history is monotone nondecreasing") {
    Rng seeds(5150);
    for (int run = 0; run < 5; ++run) {
        SwarmConfig cfg = basic_config(2, 12, 40);
        cfg.seed = seeds.next_u64();
        std::vector<double> target(6, 0.7);
        SlotResult res = optimize_slot(sphere_fitness(target), cfg);
        REQUIRE(res.history.size() == 41);
        for (std::size_t i = 1; i < res.history.size(); ++i)
            CHECK(res.history[i] >= res.history[i - 1]);
    }
}

TEST_CASE("returned layouts satisfy every constraint at 1e-9") {
    SwarmConfig cfg = basic_config(9, 30, 25);
    double lambda = 0.0107;
    cfg.bounds = Box{Vec3{-5 * lambda, -5 * lambda, 20 - 5 * lambda},
                     Vec3{5 * lambda, 5 * lambda, 20 + 5 * lambda}};
    cfg.d_min_ma = lambda / 2.0;
    cfg.d_max_slot = lambda / 2.0;

    ArrayLayout prev;
    for (int i = 0; i < 9; ++i)
        prev.positions.push_back(Vec3{(i % 3 - 1) * lambda, (i / 3 - 1) * lambda, 20.0});

    FitnessFn pull_x = [](const ArrayLayout& l) {
        double s = 0.0;
        for (const auto& p : l.positions) s += p.x;
        return s;
    };
    SlotResult res = optimize_slot(pull_x, cfg, &prev, &prev);
    FeasibilityReport rep = check_layout(res.layout, cfg.bounds, cfg.d_min_ma, &prev,
                                         cfg.d_max_slot, 1e-9);
    CHECK(rep.ok);
    INFO(rep.violation);
    CHECK(res.layout.max_displacement(prev) <= cfg.d_max_slot + 1e-9);
}

TEST_CASE("more iterations shrink the median sphere error") {
    auto median_err = [](int iters) {
        std::vector<double> errs;
        for (int s = 0; s < 20; ++s) {
            SwarmConfig cfg = basic_config(2, 15, iters);
            cfg.seed = 10000 + static_cast<std::uint64_t>(s);
            std::vector<double> target(6, 0.6);
            SlotResult res = optimize_slot(sphere_fitness(target), cfg);
            errs.push_back(-res.fit);
        }
        std::sort(errs.begin(), errs.end());
        return errs[errs.size() / 2];
    };
    CHECK(median_err(100) < median_err(10));
}

TEST_CASE("PSO beats the 95th percentile of a brute-force grid") {
    // one antenna roaming a 2D slab; rugged multimodal fitness
    auto fitness_value = [](double x, double y) {
        return std::sin(5.3 * x) * std::cos(3.7 * y) + 0.6 * std::sin(9.1 * (x + y)) +
               0.3 * std::cos(12.7 * x * y);
    };
    FitnessFn f = [&](const ArrayLayout& l) {
        return fitness_value(l.positions[0].x, l.positions[0].y);
    };

    std::vector<double> grid;
    for (int i = 0; i < 21; ++i)
        for (int j = 0; j < 21; ++j) grid.push_back(fitness_value(i / 20.0, j / 20.0));
    std::sort(grid.begin(), grid.end());
    double p95 = grid[static_cast<std::size_t>(std::floor(0.95 * (grid.size() - 1)))];

    int wins = 0;
    for (int s = 0; s < 20; ++s) {
        SwarmConfig cfg = basic_config(1, 20, 40);
        cfg.bounds = Box{Vec3{0, 0, 0}, Vec3{1, 1, 0}};
        cfg.seed = 777 + static_cast<std::uint64_t>(s);
        if (optimize_slot(f, cfg).fit >= p95) ++wins;
    }
    CHECK(wins >= 19);
}

TEST_CASE("wall time tracks K * I_max for a fixed-cost fitness" * doctest::timeout(120)) {
    // fitness with a deterministic arithmetic spin so call cost dominates
    FitnessFn f = [](const ArrayLayout& l) {
        double acc = l.positions[0].x;
        for (int i = 0; i < 4000; ++i) acc += std::sin(acc + i * 1e-3);
        return acc;
    };
    auto timed = [&](int particles, int iters) {
        SwarmConfig cfg = basic_config(1, particles, iters);
        cfg.seed = 99;
        auto t0 = std::chrono::steady_clock::now();
        optimize_slot(f, cfg);
        auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };
    timed(10, 20); // warm up
    double t1 = timed(20, 50);
    double t4 = timed(40, 100);
    double ratio = t4 / t1;
    CHECK(ratio > 4.0 * 0.7);
    CHECK(ratio < 4.0 * 1.3 + 1.0);
}
