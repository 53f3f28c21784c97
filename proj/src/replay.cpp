#include "replay.hpp"

#include <future>

#include "channel.hpp"
#include "error.hpp"

namespace mapos::eval {

namespace {

struct SweepPoint {
    const char* param;
    std::uint64_t param_id;
    double value;
};

double rate_for(const ArrayLayout& layout, const channel::NodeState& bob,
                const channel::NodeState& eve, const cfg::RunConfig& rc,
                const SweepPoint& pt, std::uint64_t slot_key) {
    channel::LinkBudget budget = cfg::to_budget(rc.scenario);
    channel::ChannelScenario scen = cfg::to_channel_scenario(rc.scenario);
    scen.nlos_paths = rc.eval.replay_nlos;
    if (pt.param_id == 0)
        scen.alpha = pt.value;
    else if (pt.param_id == 1)
        budget.noise_power = pt.value;
    else
        budget.tx_power = pt.value;
    // identical multipath draws for every grid value and every layout
    Rng rng = Rng::substream(rc.seed, {0x5EC, slot_key, pt.param_id});
    return channel::expected_secrecy_rate(layout, bob, eve, budget, scen,
                                          rc.scenario.mc_samples, rng);
}

} // namespace

std::vector<ReplayRow> secrecy_replay(const std::string& model_name,
                                      const data::Dataset& ds,
                                      const std::vector<ReplaySlot>& slots,
                                      const ArrayLayout& fixed_layout,
                                      const cfg::RunConfig& rc, int threads) {
    std::vector<SweepPoint> points;
    for (double v : rc.eval.alpha_grid) points.push_back({"alpha", 0, v});
    for (double v : rc.eval.noise_grid) points.push_back({"noise_w", 1, v});
    for (double v : rc.eval.power_grid) points.push_back({"power_w", 2, v});

    std::vector<std::vector<ReplayRow>> per_slot(slots.size());
    auto run_slot = [&](std::size_t si) {
        const ReplaySlot& rs = slots[si];
        if (rs.record_index < 0 || rs.record_index >= ds.slots())
            throw numeric_error("replay slot " + std::to_string(rs.record_index) +
                                " outside the dataset");
        const data::SlotRecord& rec = ds.records[static_cast<std::size_t>(rs.record_index)];
        channel::NodeState bob{rec.bob, channel::NodeRole::Bob};
        channel::NodeState eve{rec.eve, channel::NodeRole::Eve};
        const std::uint64_t slot_key = static_cast<std::uint64_t>(rs.record_index);

        per_slot[si].reserve(points.size());
        for (const SweepPoint& pt : points) {
            ReplayRow row;
            row.model = model_name;
            row.slot = rs.record_index;
            row.param = pt.param;
            row.value = pt.value;
            row.fixed_rate = rate_for(fixed_layout, bob, eve, rc, pt, slot_key);
            row.optimal_rate = rate_for(rec.layout, bob, eve, rc, pt, slot_key);
            row.predicted_rate = rate_for(rs.predicted, bob, eve, rc, pt, slot_key);
            per_slot[si].push_back(row);
        }
    };

    const int workers = std::max(1, threads);
    if (workers == 1 || slots.size() < 2) {
        for (std::size_t si = 0; si < slots.size(); ++si) run_slot(si);
    } else {
        std::vector<std::future<void>> futs;
        std::size_t chunk =
            (slots.size() + static_cast<std::size_t>(workers) - 1) / workers;
        for (std::size_t b = 0; b < slots.size(); b += chunk) {
            std::size_t e = std::min(slots.size(), b + chunk);
            futs.push_back(std::async(std::launch::async, [&, b, e]() {
                for (std::size_t si = b; si < e; ++si) run_slot(si);
            }));
        }
        for (auto& f : futs) f.get();
    }

    std::vector<ReplayRow> rows;
    for (auto& part : per_slot)
        rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

} // namespace mapos::eval
