#ifndef MAPOS_DATASET_HPP
#define MAPOS_DATASET_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace mapos::data {

// One optimized time slot: UAV states, the chosen antenna layout, the secrecy
// rate it achieved, and how many PSO iterations it took to settle.
struct SlotRecord {
    int t = 0;
    Vec3 bob;
    Vec3 eve;
    ArrayLayout layout;
    double secrecy = 0.0;
    int pso_iters = 0;

    bool operator==(const SlotRecord& o) const {
        return t == o.t && bob == o.bob && eve == o.eve && secrecy == o.secrecy &&
               pso_iters == o.pso_iters && layout.positions == o.layout.positions;
    }
};

// Supervised corpus for position prediction. All numeric fields are stored in
// their 9-significant-digit text form, so save/load round-trips bit-exactly.
struct Dataset {
    cfg::RunConfig config; // snapshot of the generating configuration
    std::string units = "meters";
    std::vector<SlotRecord> records;
    Vec3 norm_lo; // per-axis bounds over all stored antenna coordinates
    Vec3 norm_hi;

    std::size_t antennas() const { return config.scenario.antennas; }
    int slots() const { return static_cast<int>(records.size()); }
    bool operator==(const Dataset& o) const {
        return units == o.units && records == o.records && norm_lo == o.norm_lo &&
               norm_hi == o.norm_hi;
    }
};

// Optional progress hook: (slot, total_slots, secrecy).
using ProgressFn = std::function<void(int, int, double)>;

// Runs the per-slot secrecy maximization over the configured trajectories.
// Slot t's swarm is warm-started from slot t-1's layout, which also provides
// the displacement-cap reference. `threads` parallelizes fitness evaluation
// without changing results.
Dataset build_dataset(const cfg::RunConfig& config, const ProgressFn& progress = nullptr);

// Smooth sinusoidal layout motion on a spaced grid instead of PSO output;
// used for predictor sanity scenarios and as a fast demo corpus.
// `amplitude_scale` in [0,1] scales the spacing-safe maximum amplitude
// (0 = perfectly constant layouts).
Dataset build_synthetic_dataset(const cfg::RunConfig& config, double period_slots = 80.0,
                                double amplitude_scale = 1.0);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Sliding prediction windows with chronological train/val/test partitioning.
struct WindowSet {
    int t_hist = 0;
    int t_pre = 0;
    std::size_t antennas = 0;
    std::vector<int> starts;                 // every window, by start record index
    std::vector<std::size_t> train_idx;      // indices into `starts`
    std::vector<std::size_t> val_idx;
    std::vector<std::size_t> test_idx;
    // normalized coordinates, row-major [t][antenna][axis]
    std::vector<std::vector<double>> inputs;  // t_hist * M * 3 each
    std::vector<std::vector<double>> targets; // t_pre * M * 3 each
    Vec3 norm_lo;  // train-partition statistics
    Vec3 norm_span;
    Box clamp_box; // feasible region from the dataset config

    std::size_t window_count() const { return starts.size(); }
};

// Windows of length t_hist + t_pre at the given stride; a window belongs to a
// partition only when it lies entirely inside that partition's record range,
// so no record is shared across splits. Coordinates are min-max normalized
// with training-partition statistics.
WindowSet split_windows(const Dataset& ds, int t_hist, int t_pre, int stride,
                        double val_fraction = 0.15, double test_fraction = 0.15);

// Inverse of the window normalization, exact to 1e-12.
void denormalize(const WindowSet& ws, std::vector<double>& coords);
void normalize_inplace(const WindowSet& ws, std::vector<double>& coords);

} // namespace mapos::data

#endif
