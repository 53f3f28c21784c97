#ifndef MAPOS_GEOMETRY_HPP
#define MAPOS_GEOMETRY_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "vec3.hpp"

namespace mapos {

// Axis-aligned feasible region for antenna positions.
struct Box {
    Vec3 lo;
    Vec3 hi;

    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }

    bool contains(const Vec3& p, double tol = 0.0) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol &&
               p.y <= hi.y + tol && p.z >= lo.z - tol && p.z <= hi.z + tol;
    }

    Vec3 clamp(const Vec3& p) const {
        return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y),
                std::clamp(p.z, lo.z, hi.z)};
    }
};

// Positions of the M movable antennas at one time slot.
struct ArrayLayout {
    std::vector<Vec3> positions;
    int slot_index = 0;

    std::size_t size() const { return positions.size(); }

    double min_pairwise_distance() const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a + 1 < positions.size(); ++a)
            for (std::size_t b = a + 1; b < positions.size(); ++b)
                best = std::min(best, positions[a].dist(positions[b]));
        return best;
    }

    // Largest per-antenna displacement against another layout of equal size.
    double max_displacement(const ArrayLayout& prev) const {
        double worst = 0.0;
        for (std::size_t m = 0; m < positions.size(); ++m)
            worst = std::max(worst, positions[m].dist(prev.positions[m]));
        return worst;
    }
};

struct FeasibilityReport {
    bool ok = true;
    std::string violation; // empty when ok
};

// Checks box membership, minimum spacing, and (optionally) the per-slot
// displacement cap against a previous layout.
inline FeasibilityReport check_layout(const ArrayLayout& layout, const Box& box,
                                      double d_min, const ArrayLayout* prev = nullptr,
                                      double d_max_slot = 0.0, double tol = 1e-9) {
    FeasibilityReport r;
    for (std::size_t m = 0; m < layout.positions.size(); ++m) {
        if (!layout.positions[m].finite()) {
            r.ok = false;
            r.violation = "antenna " + std::to_string(m) + " has non-finite coordinates";
            return r;
        }
        if (!box.contains(layout.positions[m], tol)) {
            r.ok = false;
            r.violation = "antenna " + std::to_string(m) + " outside feasible box";
            return r;
        }
    }
    for (std::size_t a = 0; a + 1 < layout.positions.size(); ++a) {
        for (std::size_t b = a + 1; b < layout.positions.size(); ++b) {
            if (layout.positions[a].dist(layout.positions[b]) < d_min - tol) {
                r.ok = false;
                r.violation = "antennas " + std::to_string(a) + "," + std::to_string(b) +
                              " closer than minimum spacing";
                return r;
            }
        }
    }
    if (prev != nullptr) {
        for (std::size_t m = 0; m < layout.positions.size(); ++m) {
            if (layout.positions[m].dist(prev->positions[m]) > d_max_slot + tol) {
                r.ok = false;
                r.violation = "antenna " + std::to_string(m) + " exceeds per-slot step cap";
                return r;
            }
        }
    }
    return r;
}

} // namespace mapos

#endif
