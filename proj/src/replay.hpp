#ifndef MAPOS_REPLAY_HPP
#define MAPOS_REPLAY_HPP

#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "geometry.hpp"

// Replays antenna layouts through the channel model across parameter sweeps
// to measure the secrecy consequences of prediction quality.
namespace mapos::eval {

struct ReplayRow {
    std::string model;
    int slot = 0;       // dataset record index
    std::string param;  // alpha | noise_w | power_w
    double value = 0.0;
    double fixed_rate = 0.0;     // uniform half-wavelength grid layout
    double optimal_rate = 0.0;   // dataset (optimizer) layout
    double predicted_rate = 0.0; // model-predicted layout
};

// One predicted layout at a dataset slot.
struct ReplaySlot {
    int record_index = 0;
    ArrayLayout predicted;
};

// For every slot and every grid value of alpha / noise power / transmit power,
// evaluates the expected secrecy rate of the fixed, optimal, and predicted
// layouts. The multipath realization stream is keyed by (seed, slot, param),
// so all grid values and all three layouts see identical draws. Slots may be
// evaluated in parallel without changing results.
std::vector<ReplayRow> secrecy_replay(const std::string& model_name,
                                      const data::Dataset& ds,
                                      const std::vector<ReplaySlot>& slots,
                                      const ArrayLayout& fixed_layout,
                                      const cfg::RunConfig& rc, int threads);

} // namespace mapos::eval

#endif
