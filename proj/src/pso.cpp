#include "pso.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <unordered_map>

#include "error.hpp"

namespace mapos::pso {

namespace {

constexpr int kRepairPasses = 50;
constexpr int kResampleAttempts = 50;
constexpr double kFeasTol = 1e-9;

struct QuantizedKey {
    std::vector<std::int64_t> k;
    bool operator==(const QuantizedKey& o) const { return k == o.k; }
};

struct QuantizedKeyHash {
    std::size_t operator()(const QuantizedKey& q) const {
        std::size_t h = 1469598103934665603ULL;
        for (std::int64_t v : q.k) {
            h ^= static_cast<std::size_t>(v);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

QuantizedKey quantize(const std::vector<double>& q) {
    QuantizedKey key;
    key.k.reserve(q.size());
    for (double x : q) key.k.push_back(llround(x * 1e6));
    return key;
}

using FitnessCache = std::unordered_map<QuantizedKey, double, QuantizedKeyHash>;

Vec3 antenna(const std::vector<double>& q, std::size_t m) {
    return {q[3 * m], q[3 * m + 1], q[3 * m + 2]};
}

void set_antenna(std::vector<double>& q, std::size_t m, const Vec3& p) {
    q[3 * m] = p.x;
    q[3 * m + 1] = p.y;
    q[3 * m + 2] = p.z;
}

// Per-antenna radial truncation onto the ball of radius d_max around prev.
void truncate_to_ball(std::vector<double>& q, const ArrayLayout& prev, double d_max) {
    for (std::size_t m = 0; m < prev.positions.size(); ++m) {
        Vec3 p = antenna(q, m);
        Vec3 d = p - prev.positions[m];
        double dist = d.norm();
        if (dist > d_max && dist > 0.0) set_antenna(q, m, prev.positions[m] + d * (d_max / dist));
    }
}

void clamp_to_box(std::vector<double>& q, const Box& box) {
    for (std::size_t m = 0; m * 3 < q.size(); ++m) set_antenna(q, m, box.clamp(antenna(q, m)));
}

bool spacing_ok(const std::vector<double>& q, std::size_t m_ant, double d_min) {
    for (std::size_t a = 0; a + 1 < m_ant; ++a)
        for (std::size_t b = a + 1; b < m_ant; ++b)
            if (antenna(q, a).dist(antenna(q, b)) < d_min - kFeasTol) return false;
    return true;
}

// Iterative pairwise repulsion; re-projects onto box and step ball after each
// pass. Returns passes spent, or -1 when the spacing could not be restored.
long repair_spacing(std::vector<double>& q, const SwarmConfig& cfg, const ArrayLayout* prev,
                    Rng& rng, std::size_t* bad_a, std::size_t* bad_b) {
    const std::size_t m_ant = cfg.antennas;
    if (cfg.d_min_ma <= 0.0 || m_ant < 2) return 0;
    const double target = cfg.d_min_ma * (1.0 + 1e-9);
    for (int pass = 0; pass < kRepairPasses; ++pass) {
        if (spacing_ok(q, m_ant, cfg.d_min_ma)) return pass;
        for (std::size_t a = 0; a + 1 < m_ant; ++a) {
            for (std::size_t b = a + 1; b < m_ant; ++b) {
                Vec3 pa = antenna(q, a);
                Vec3 pb = antenna(q, b);
                Vec3 d = pb - pa;
                double dist = d.norm();
                if (dist >= target) continue;
                Vec3 dir;
                if (dist < 1e-12) {
                    // coincident antennas: pick a random separation direction
                    double theta = rng.uniform(-M_PI / 2.0, M_PI / 2.0);
                    double phi = rng.uniform(-M_PI, M_PI);
                    dir = {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
                           std::sin(theta)};
                } else {
                    dir = d * (1.0 / dist);
                }
                double push = (target - dist) / 2.0;
                set_antenna(q, a, pa - dir * push);
                set_antenna(q, b, pb + dir * push);
            }
        }
        clamp_to_box(q, cfg.bounds);
        if (prev != nullptr && cfg.d_max_slot > 0.0) truncate_to_ball(q, *prev, cfg.d_max_slot);
    }
    if (spacing_ok(q, m_ant, cfg.d_min_ma)) return kRepairPasses;
    for (std::size_t a = 0; a + 1 < m_ant; ++a)
        for (std::size_t b = a + 1; b < m_ant; ++b)
            if (antenna(q, a).dist(antenna(q, b)) < cfg.d_min_ma - kFeasTol) {
                *bad_a = a;
                *bad_b = b;
                return -1;
            }
    return kRepairPasses;
}

// Uniform draw in the box, truncated to the step ball when prev is given.
std::vector<double> sample_feasible_point(const SwarmConfig& cfg, const ArrayLayout* prev,
                                          Rng& rng, long* repairs, long* resamples) {
    std::vector<double> q(3 * cfg.antennas);
    std::size_t bad_a = 0, bad_b = 0;
    for (int attempt = 0; attempt < kResampleAttempts; ++attempt) {
        for (std::size_t m = 0; m < cfg.antennas; ++m) {
            Vec3 p{rng.uniform(cfg.bounds.lo.x, cfg.bounds.hi.x),
                   rng.uniform(cfg.bounds.lo.y, cfg.bounds.hi.y),
                   rng.uniform(cfg.bounds.lo.z, cfg.bounds.hi.z)};
            set_antenna(q, m, p);
        }
        if (prev != nullptr && cfg.d_max_slot > 0.0) truncate_to_ball(q, *prev, cfg.d_max_slot);
        long passes = repair_spacing(q, cfg, prev, rng, &bad_a, &bad_b);
        if (passes >= 0) {
            *repairs += passes;
            return q;
        }
        ++(*resamples);
    }
    if (prev != nullptr) return flatten(*prev); // prev is feasible by construction
    throw infeasible_error("swarm init: cannot satisfy minimum spacing between antennas " +
                           std::to_string(bad_a) + " and " + std::to_string(bad_b) +
                           " inside the configured box");
}

double cached_fitness(const FitnessFn& fitness, const std::vector<double>& q,
                      FitnessCache& cache) {
    QuantizedKey key = quantize(q);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    double f = fitness(unflatten(q));
    cache.emplace(std::move(key), f);
    return f;
}

// Coordinate-wise shrinking grid search around gbest. Probes stay inside the
// box, the per-antenna step ball, and the spacing constraint, so the refined
// point is feasible whenever the input point is.
void polish_gbest(const FitnessFn& fitness, const SwarmConfig& cfg, const ArrayLayout* prev,
                  FitnessCache& cache, std::vector<double>& q, double& fit) {
    const double ext[3] = {cfg.bounds.extent().x, cfg.bounds.extent().y,
                           cfg.bounds.extent().z};
    const double lo_box[3] = {cfg.bounds.lo.x, cfg.bounds.lo.y, cfg.bounds.lo.z};
    const double hi_box[3] = {cfg.bounds.hi.x, cfg.bounds.hi.y, cfg.bounds.hi.z};

    for (int round = 0; round < cfg.polish_rounds; ++round) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            const std::size_t ant = j / 3;
            const int axis = static_cast<int>(j % 3);
            double lo = lo_box[axis];
            double hi = hi_box[axis];
            if (prev != nullptr && cfg.d_max_slot > 0.0) {
                const Vec3& pv = prev->positions[ant];
                Vec3 cur = antenna(q, ant);
                double d0 = cur.x - pv.x, d1 = cur.y - pv.y, d2 = cur.z - pv.z;
                double off2;
                double prev_axis;
                if (axis == 0) {
                    off2 = d1 * d1 + d2 * d2;
                    prev_axis = pv.x;
                } else if (axis == 1) {
                    off2 = d0 * d0 + d2 * d2;
                    prev_axis = pv.y;
                } else {
                    off2 = d0 * d0 + d1 * d1;
                    prev_axis = pv.z;
                }
                double slack2 = cfg.d_max_slot * cfg.d_max_slot - off2;
                if (slack2 <= 0.0) continue;
                double slack = std::sqrt(slack2);
                lo = std::max(lo, prev_axis - slack);
                hi = std::min(hi, prev_axis + slack);
            }
            if (hi <= lo) continue;

            double center = q[j];
            double radius = ext[axis] / 16.0 / static_cast<double>(round + 1);
            for (int stage = 0; stage < 3; ++stage) {
                double best_x = center;
                double best_f = fit;
                for (double frac : {-1.0, -0.5, 0.5, 1.0}) {
                    double x = std::clamp(center + frac * radius, lo, hi);
                    if (x == center) continue;
                    q[j] = x;
                    if (!spacing_ok(q, cfg.antennas, cfg.d_min_ma)) continue;
                    double f = cached_fitness(fitness, q, cache);
                    if (f > best_f) {
                        best_f = f;
                        best_x = x;
                    }
                }
                q[j] = best_x;
                fit = best_f;
                center = best_x;
                radius *= 0.2;
            }
        }
    }
}

} // namespace

ArrayLayout unflatten(const std::vector<double>& q, int slot_index) {
    ArrayLayout layout;
    layout.slot_index = slot_index;
    layout.positions.resize(q.size() / 3);
    for (std::size_t m = 0; m < layout.positions.size(); ++m)
        layout.positions[m] = antenna(q, m);
    return layout;
}

std::vector<double> flatten(const ArrayLayout& layout) {
    std::vector<double> q(3 * layout.size());
    for (std::size_t m = 0; m < layout.size(); ++m) set_antenna(q, m, layout.positions[m]);
    return q;
}

double inertia(int iteration, const SwarmConfig& cfg) {
    if (cfg.iterations <= 0) return cfg.omega_max;
    double frac = static_cast<double>(iteration) / static_cast<double>(cfg.iterations);
    return cfg.omega_max - (cfg.omega_max - cfg.omega_min) * frac;
}

std::vector<double> update_velocity(const Particle& p, const std::vector<double>& gbest_q,
                                    double omega, const SwarmConfig& cfg, Rng& rng) {
    std::vector<double> v(p.v.size());
    if (!cfg.per_coordinate_random) {
        double s1 = rng.uniform01();
        double s2 = rng.uniform01();
        for (std::size_t j = 0; j < v.size(); ++j)
            v[j] = omega * p.v[j] + cfg.c1 * s1 * (p.pbest_q[j] - p.q[j]) +
                   cfg.c2 * s2 * (gbest_q[j] - p.q[j]);
    } else {
        for (std::size_t j = 0; j < v.size(); ++j) {
            double s1 = rng.uniform01();
            double s2 = rng.uniform01();
            v[j] = omega * p.v[j] + cfg.c1 * s1 * (p.pbest_q[j] - p.q[j]) +
                   cfg.c2 * s2 * (gbest_q[j] - p.q[j]);
        }
    }
    return v;
}

long apply_position_update(Particle& p, const std::vector<double>& v_new,
                           const SwarmConfig& cfg, const ArrayLayout* prev, Rng& rng,
                           long* resamples) {
    p.v = v_new;
    std::vector<double> q(p.q.size());
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = p.q[j] + v_new[j];

    // Box projection; zero the velocity components that hit a face so the
    // particle does not keep pushing into the boundary.
    const double lo[3] = {cfg.bounds.lo.x, cfg.bounds.lo.y, cfg.bounds.lo.z};
    const double hi[3] = {cfg.bounds.hi.x, cfg.bounds.hi.y, cfg.bounds.hi.z};
    for (std::size_t j = 0; j < q.size(); ++j) {
        double l = lo[j % 3];
        double h = hi[j % 3];
        if (q[j] < l) {
            q[j] = l;
            p.v[j] = 0.0;
        } else if (q[j] > h) {
            q[j] = h;
            p.v[j] = 0.0;
        }
    }

    if (prev != nullptr && cfg.d_max_slot > 0.0) truncate_to_ball(q, *prev, cfg.d_max_slot);

    std::size_t bad_a = 0, bad_b = 0;
    long passes = repair_spacing(q, cfg, prev, rng, &bad_a, &bad_b);
    if (passes < 0) {
        long local_repairs = 0;
        q = sample_feasible_point(cfg, prev, rng, &local_repairs, resamples);
        passes = kRepairPasses + local_repairs;
        ++(*resamples);
    }
    p.q = std::move(q);
    return passes;
}

SwarmState init_swarm(const SwarmConfig& cfg, const ArrayLayout* prev,
                      const ArrayLayout* warm_start, const FitnessFn& fitness) {
    if (cfg.particles < 1) throw config_error("swarm needs at least one particle");
    if (cfg.bounds.lo.x > cfg.bounds.hi.x || cfg.bounds.lo.y > cfg.bounds.hi.y ||
        cfg.bounds.lo.z > cfg.bounds.hi.z)
        throw infeasible_error("swarm bounds are empty (lo > hi)");

    SwarmState st;
    st.particles.resize(static_cast<std::size_t>(cfg.particles));
    const Vec3 ext = cfg.bounds.extent();
    for (int k = 0; k < cfg.particles; ++k) {
        Rng rng = Rng::substream(cfg.seed, {0xC0FFEEULL, static_cast<std::uint64_t>(k)});
        Particle& p = st.particles[static_cast<std::size_t>(k)];
        if (k == 0 && warm_start != nullptr) {
            p.q = flatten(*warm_start);
        } else {
            p.q = sample_feasible_point(cfg, prev, rng, &st.repairs, &st.resamples);
        }
        p.v.resize(p.q.size());
        for (std::size_t m = 0; m < cfg.antennas; ++m) {
            p.v[3 * m] = rng.uniform(-ext.x / 10.0, ext.x / 10.0);
            p.v[3 * m + 1] = rng.uniform(-ext.y / 10.0, ext.y / 10.0);
            p.v[3 * m + 2] = rng.uniform(-ext.z / 10.0, ext.z / 10.0);
        }
        p.pbest_q = p.q;
        p.pbest_fit = fitness(unflatten(p.q));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < st.particles.size(); ++k)
        if (st.particles[k].pbest_fit > st.particles[best].pbest_fit) best = k;
    st.gbest_q = st.particles[best].pbest_q;
    st.gbest_fit = st.particles[best].pbest_fit;
    st.history.push_back(st.gbest_fit);
    return st;
}

SlotResult optimize_slot(const FitnessFn& fitness, const SwarmConfig& cfg,
                         const ArrayLayout* prev, const ArrayLayout* warm_start) {
    FitnessCache cache;
    // init_swarm evaluations go through the cache too
    FitnessFn init_fitness = [&](const ArrayLayout& l) {
        return cached_fitness(fitness, flatten(l), cache);
    };
    SwarmState st = init_swarm(cfg, prev, warm_start, init_fitness);
    {
        double mean0 = 0.0;
        for (const auto& p : st.particles) mean0 += p.pbest_fit;
        mean0 /= static_cast<double>(st.particles.size());
        st.diagnostics.push_back({0, st.gbest_fit, mean0, st.repairs});
    }

    const int workers = std::max(1, cfg.threads);
    for (int i = 1; i <= cfg.iterations; ++i) {
        const double omega = inertia(i, cfg);
        const std::vector<double> gbest_snapshot = st.gbest_q;
        const std::size_t n = st.particles.size();

        std::vector<double> fits(n, 0.0);
        std::vector<long> pass_count(n, 0);
        std::vector<long> resample_count(n, 0);
        std::vector<FitnessCache> new_entries(n);

        auto eval_range = [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) {
                Rng rng = Rng::substream(cfg.seed, {static_cast<std::uint64_t>(k),
                                                    static_cast<std::uint64_t>(i)});
                Particle& p = st.particles[k];
                std::vector<double> v_new = update_velocity(p, gbest_snapshot, omega, cfg, rng);
                pass_count[k] = apply_position_update(p, v_new, cfg, prev, rng, &resample_count[k]);
                QuantizedKey key = quantize(p.q);
                auto it = cache.find(key);
                if (it != cache.end()) {
                    fits[k] = it->second;
                } else {
                    fits[k] = fitness(unflatten(p.q, 0));
                    new_entries[k].emplace(std::move(key), fits[k]);
                }
            }
        };

        if (workers == 1 || n < 2) {
            eval_range(0, n);
        } else {
            std::vector<std::future<void>> futs;
            std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) /
                                static_cast<std::size_t>(workers);
            for (std::size_t b = 0; b < n; b += chunk)
                futs.push_back(std::async(std::launch::async, eval_range, b,
                                          std::min(n, b + chunk)));
            for (auto& f : futs) f.get();
        }

        // Sequential reduction: pbest/gbest merge and cache merge in particle order.
        double mean_fit = 0.0;
        long iter_repairs = 0;
        for (std::size_t k = 0; k < n; ++k) {
            for (auto& kv : new_entries[k]) cache.emplace(kv.first, kv.second);
            Particle& p = st.particles[k];
            mean_fit += fits[k];
            iter_repairs += pass_count[k];
            st.resamples += resample_count[k];
            if (fits[k] > p.pbest_fit) {
                p.pbest_fit = fits[k];
                p.pbest_q = p.q;
            }
            if (p.pbest_fit > st.gbest_fit) {
                st.gbest_fit = p.pbest_fit;
                st.gbest_q = p.pbest_q;
            }
        }
        st.repairs += iter_repairs;
        st.iteration = i;
        st.history.push_back(st.gbest_fit);
        st.diagnostics.push_back({i, st.gbest_fit, mean_fit / static_cast<double>(n),
                                  iter_repairs});
    }

    // I_max = 0 means pure sampling: return the best initial draw untouched.
    if (cfg.polish_rounds > 0 && cfg.iterations > 0)
        polish_gbest(fitness, cfg, prev, cache, st.gbest_q, st.gbest_fit);

    SlotResult res;
    res.layout = unflatten(st.gbest_q);
    res.fit = st.gbest_fit;
    res.history = std::move(st.history);
    res.diagnostics = std::move(st.diagnostics);
    res.repairs = st.repairs;
    res.resamples = st.resamples;
    return res;
}

} // namespace mapos::pso
