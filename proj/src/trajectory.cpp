#include "trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "textio.hpp"

namespace mapos::traj {

namespace {

constexpr double kMinAltitude = 1.0; // meters; random walks are floored here

std::vector<Vec3> linear_path(const cfg::TrajectorySpec& spec) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(spec.slots));
    for (int t = 0; t < spec.slots; ++t) {
        double frac = spec.slots > 1 ? static_cast<double>(t) / (spec.slots - 1) : 0.0;
        out.push_back(spec.start + (spec.end - spec.start) * frac);
    }
    return out;
}

std::vector<Vec3> sinusoid_path(const cfg::TrajectorySpec& spec) {
    if (spec.period_slots <= 0.0)
        throw config_error("sinusoid trajectory needs a positive period");
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(spec.slots));
    const double omega = 2.0 * M_PI / spec.period_slots;
    for (int t = 0; t < spec.slots; ++t) {
        double frac = spec.slots > 1 ? static_cast<double>(t) / (spec.slots - 1) : 0.0;
        Vec3 center = spec.start + (spec.end - spec.start) * frac;
        Vec3 wobble{spec.amplitude.x * std::sin(omega * t + spec.phases.x),
                    spec.amplitude.y * std::sin(omega * t + spec.phases.y),
                    spec.amplitude.z * std::sin(omega * t + spec.phases.z)};
        out.push_back(center + wobble);
    }
    return out;
}

std::vector<Vec3> random_walk_path(const cfg::TrajectorySpec& spec, Rng& rng) {
    if (spec.step_std <= 0.0)
        throw config_error("random walk trajectory needs a positive step_std");
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(spec.slots));
    Vec3 p = spec.start;
    p.z = std::max(p.z, kMinAltitude);
    out.push_back(p);
    const double clip = 4.0 * spec.step_std; // keeps the path continuous
    for (int t = 1; t < spec.slots; ++t) {
        Vec3 step{std::clamp(rng.normal(0.0, spec.step_std), -clip, clip),
                  std::clamp(rng.normal(0.0, spec.step_std), -clip, clip),
                  std::clamp(rng.normal(0.0, spec.step_std), -clip, clip)};
        p += step;
        p.z = std::max(p.z, kMinAltitude);
        out.push_back(p);
    }
    return out;
}

} // namespace

std::vector<Vec3> generate_trajectory(const cfg::TrajectorySpec& spec, Rng& rng) {
    if (spec.slots < 1) throw config_error("trajectory needs at least one slot");
    std::vector<Vec3> path;
    switch (spec.kind) {
        case cfg::TrajectoryKind::WaypointLinear: path = linear_path(spec); break;
        case cfg::TrajectoryKind::ParametricSinusoid: path = sinusoid_path(spec); break;
        case cfg::TrajectoryKind::RandomWalk: path = random_walk_path(spec, rng); break;
    }
    for (const Vec3& p : path) {
        if (!p.finite()) throw numeric_error("trajectory produced non-finite coordinates");
        if (p.z <= 0.0)
            throw config_error("trajectory dips to altitude " + fmt_double(p.z) +
                               " m; UAV paths must stay above ground");
    }
    return path;
}

} // namespace mapos::traj
