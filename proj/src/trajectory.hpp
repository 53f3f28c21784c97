#ifndef MAPOS_TRAJECTORY_HPP
#define MAPOS_TRAJECTORY_HPP

#include <vector>

#include "config.hpp"
#include "rng.hpp"
#include "vec3.hpp"

namespace mapos::traj {

// Length-T UAV path for one node. Continuous (bounded per-step displacement)
// and strictly above ground for every kind.
std::vector<Vec3> generate_trajectory(const cfg::TrajectorySpec& spec, Rng& rng);

} // namespace mapos::traj

#endif
