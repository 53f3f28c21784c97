#ifndef MAPOS_PSO_HPP
#define MAPOS_PSO_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

// Constrained particle swarm search for per-slot antenna placement.
// Particles flatten the M antenna positions into 3M-dimensional vectors
// (x,y,z per antenna); feasibility is maintained by projection, never by
// fitness penalties.
namespace mapos::pso {

struct SwarmConfig {
    int particles = 50;       // K
    int iterations = 100;     // I_max
    double c1 = 1.49445;
    double c2 = 1.49445;
    double omega_max = 0.9;
    double omega_min = 0.4;
    Box bounds;               // per-antenna feasible box
    std::size_t antennas = 9; // M
    double d_max_slot = 0.0;  // per-slot displacement cap (vs prev layout)
    double d_min_ma = 0.0;    // minimum inter-antenna spacing
    std::uint64_t seed = 0;
    bool per_coordinate_random = false; // draw s1,s2 per coordinate instead of per particle
    int threads = 1;                    // fitness evaluation workers; result-invariant
    // Deterministic per-coordinate refinement of gbest after the swarm loop;
    // the swarm alone cannot reliably localize an optimum to sub-1e-3 in a
    // 27-dimensional space within the configured iteration budget. 0 disables.
    int polish_rounds = 2;
};

struct Particle {
    std::vector<double> q;       // current position, length 3M
    std::vector<double> v;       // velocity, length 3M
    std::vector<double> pbest_q; // personal best position
    double pbest_fit = 0.0;
};

struct IterationDiag {
    int iteration = 0;
    double gbest_fit = 0.0;
    double mean_fit = 0.0;
    long repairs = 0; // spacing-repair passes spent this iteration
};

struct SwarmState {
    std::vector<Particle> particles;
    std::vector<double> gbest_q;
    double gbest_fit = 0.0;
    int iteration = 0;
    std::vector<double> history; // gbest_fit per iteration, element 0 = initial
    std::vector<IterationDiag> diagnostics;
    long repairs = 0;   // total spacing-repair passes
    long resamples = 0; // particles re-drawn after failed repair
};

struct SlotResult {
    ArrayLayout layout;
    double fit = 0.0;
    std::vector<double> history;
    std::vector<IterationDiag> diagnostics;
    long repairs = 0;
    long resamples = 0;
};

using FitnessFn = std::function<double(const ArrayLayout&)>;

ArrayLayout unflatten(const std::vector<double>& q, int slot_index = 0);
std::vector<double> flatten(const ArrayLayout& layout);

// Linearly decreasing inertia: omega(0) = omega_max, omega(I_max) = omega_min.
double inertia(int iteration, const SwarmConfig& cfg);

// v' = omega*v + c1*s1*(pbest - q) + c2*s2*(gbest - q), s1,s2 ~ U[0,1].
std::vector<double> update_velocity(const Particle& p, const std::vector<double>& gbest_q,
                                    double omega, const SwarmConfig& cfg, Rng& rng);

// q' = clamp_box(q + v), velocity zeroed on clamped components, then radial
// truncation to the d_max_slot ball (when prev given), then pairwise-spacing
// repair. On repair failure the particle is resampled inside the feasible
// region. Returns repair passes spent.
long apply_position_update(Particle& p, const std::vector<double>& v_new,
                           const SwarmConfig& cfg, const ArrayLayout* prev, Rng& rng,
                           long* resamples);

// K particles uniform in the feasible region (prev gbest injected as particle
// 0 when warm_start is given); velocities uniform in +-extent/10; pbest/gbest
// evaluated by `fitness`.
SwarmState init_swarm(const SwarmConfig& cfg, const ArrayLayout* prev,
                      const ArrayLayout* warm_start, const FitnessFn& fitness);

// Full synchronous PSO run. Fitness values are cached per quantized position
// (1e-6 m); per-particle RNG substreams keyed by (seed, particle, iteration)
// make parallel evaluation bit-identical to sequential.
SlotResult optimize_slot(const FitnessFn& fitness, const SwarmConfig& cfg,
                         const ArrayLayout* prev = nullptr,
                         const ArrayLayout* warm_start = nullptr);

} // namespace mapos::pso

#endif
