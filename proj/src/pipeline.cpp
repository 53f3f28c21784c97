#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <thread>

#include "channel.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "pso.hpp"
#include "replay.hpp"
#include "report.hpp"
#include "textio.hpp"
#include "trajectory.hpp"

namespace mapos::pipeline {

int resolve_threads(int configured) {
    if (configured > 0) return configured;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

GenDataSummary cmd_gen_data(const cfg::RunConfig& rc, const std::string& out_path,
                            bool verbose) {
    data::ProgressFn progress;
    if (verbose)
        progress = [](int done, int total, double secrecy) {
            std::fprintf(stderr, "slot %d/%d secrecy %.4f bits/s/Hz\n", done, total, secrecy);
        };
    data::Dataset ds = data::build_dataset(rc, progress);
    data::save_dataset(ds, out_path);

    GenDataSummary s;
    s.slots = ds.slots();
    for (const auto& r : ds.records) s.mean_secrecy += r.secrecy;
    if (s.slots > 0) s.mean_secrecy /= s.slots;
    return s;
}

void cmd_optimize(const cfg::RunConfig& rc, int slot, const std::string& dataset_path,
                  const std::string& out_csv) {
    if (slot < 0 || slot >= rc.trajectories.slots)
        throw config_error("slot " + std::to_string(slot) + " outside the scenario's " +
                           std::to_string(rc.trajectories.slots) + " slots");

    const auto& sc = rc.scenario;
    Rng bob_rng = Rng::substream(rc.seed, {1});
    Rng eve_rng = Rng::substream(rc.seed, {2});
    std::vector<Vec3> bob_path = traj::generate_trajectory(rc.trajectories.bob, bob_rng);
    std::vector<Vec3> eve_path = traj::generate_trajectory(rc.trajectories.eve, eve_rng);

    const channel::LinkBudget budget = cfg::to_budget(sc);
    const channel::ChannelScenario scen = cfg::to_channel_scenario(sc);

    pso::SwarmConfig swarm = cfg::to_swarm_config(rc);
    swarm.threads = resolve_threads(rc.threads);

    auto fitness_for = [&](int t) -> pso::FitnessFn {
        channel::NodeState bob{bob_path[static_cast<std::size_t>(t)], channel::NodeRole::Bob};
        channel::NodeState eve{eve_path[static_cast<std::size_t>(t)], channel::NodeRole::Eve};
        const std::uint64_t sid = static_cast<std::uint64_t>(t);
        return [&, bob, eve, sid](const ArrayLayout& layout) {
            Rng rng = Rng::substream(rc.seed, {3, sid});
            return channel::expected_secrecy_rate(layout, bob, eve, budget, scen,
                                                  sc.mc_samples, rng);
        };
    };

    ArrayLayout prev;
    bool has_prev = false;
    if (slot > 0) {
        if (!dataset_path.empty()) {
            data::Dataset ds = data::load_dataset(dataset_path);
            if (slot > ds.slots())
                throw config_error("slot " + std::to_string(slot) +
                                   " not reachable from a dataset with " +
                                   std::to_string(ds.slots()) + " records");
            prev = ds.records[static_cast<std::size_t>(slot) - 1].layout;
            has_prev = true;
        } else {
            // replay the slot chain; identical to dataset generation
            for (int t = 0; t < slot; ++t) {
                swarm.seed = Rng::substream(rc.seed, {4, static_cast<std::uint64_t>(t)}).next_u64();
                pso::SlotResult r = pso::optimize_slot(fitness_for(t), swarm,
                                                       has_prev ? &prev : nullptr,
                                                       has_prev ? &prev : nullptr);
                prev = r.layout;
                has_prev = true;
            }
        }
    }

    swarm.seed = Rng::substream(rc.seed, {4, static_cast<std::uint64_t>(slot)}).next_u64();
    pso::SlotResult res = pso::optimize_slot(fitness_for(slot), swarm,
                                             has_prev ? &prev : nullptr,
                                             has_prev ? &prev : nullptr);

    std::string csv = "iteration,gbest_fit,mean_fit,repairs\n";
    for (const auto& d : res.diagnostics)
        csv += std::to_string(d.iteration) + "," + fmt_double(d.gbest_fit, 9) + "," +
               fmt_double(d.mean_fit, 9) + "," + std::to_string(d.repairs) + "\n";
    write_text_file(out_csv, csv);
}

TrainSummary cmd_train(const cfg::RunConfig& rc, const std::string& dataset_path,
                       const std::string& model_out, const std::string& log_csv,
                       bool verbose) {
    data::Dataset ds = data::load_dataset(dataset_path);
    data::WindowSet ws =
        data::split_windows(ds, rc.model.t_hist_win, rc.model.t_pre, rc.model.train_stride,
                            rc.model.val_fraction, rc.model.test_fraction);
    if (ws.train_idx.empty())
        throw config_error("dataset yields no training windows with the configured sizes");

    const std::uint64_t kind_id = static_cast<std::uint64_t>(rc.model.kind);
    model::Predictor predictor(rc.model.kind, rc.model, ds.antennas(),
                               Rng::substream(rc.seed, {0x171, kind_id}).next_u64());
    if (verbose)
        std::fprintf(stderr, "training %s: %zu parameters, %zu train windows\n",
                     cfg::model_kind_name(rc.model.kind).c_str(),
                     predictor.store().parameter_count(), ws.train_idx.size());

    model::TrainResult tr =
        model::train(predictor, ws, Rng::substream(rc.seed, {0x7124, kind_id}).next_u64());

    model::save_model(predictor, model::norm_from_windows(ws), model_out);

    if (!log_csv.empty()) {
        std::string csv = "epoch,train_nmse,val_nmse,wall_ms\n";
        for (const auto& e : tr.curve) {
            char wall[32];
            std::snprintf(wall, sizeof(wall), "%.3f", e.wall_ms);
            csv += std::to_string(e.epoch) + "," + fmt_double(e.train_nmse, 9) + "," +
                   fmt_double(e.val_nmse, 9) + "," + wall + "\n";
        }
        write_text_file(log_csv, csv);
    }

    TrainSummary s;
    s.best_val_nmse = tr.best_val_nmse;
    s.best_epoch = tr.best_epoch;
    s.parameters = predictor.store().parameter_count();
    return s;
}

namespace {

struct WindowBlocks {
    std::vector<double> raw_input;  // meters
    std::vector<double> raw_truth;  // meters
    int start = 0;
};

std::vector<double> renormalize(const std::vector<double>& raw,
                                const model::SavedNormalization& norm) {
    std::vector<double> out = raw;
    const double lo[3] = {norm.lo.x, norm.lo.y, norm.lo.z};
    const double span[3] = {norm.span.x, norm.span.y, norm.span.z};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - lo[i % 3]) / span[i % 3];
    return out;
}

} // namespace

void cmd_eval(const cfg::RunConfig& rc, const std::string& dataset_path,
              const std::vector<std::string>& model_paths, const std::string& out_dir) {
    if (model_paths.empty()) throw config_error("eval needs at least one model file");
    for (int h : rc.eval.horizons)
        if (h > rc.model.t_pre)
            throw config_error("horizon " + std::to_string(h) +
                               " exceeds the prediction length " +
                               std::to_string(rc.model.t_pre));

    data::Dataset ds = data::load_dataset(dataset_path);
    data::WindowSet ws =
        data::split_windows(ds, rc.model.t_hist_win, rc.model.t_pre, rc.model.train_stride,
                            rc.model.val_fraction, rc.model.test_fraction);
    if (ws.test_idx.size() < 4)
        throw config_error("dataset yields only " + std::to_string(ws.test_idx.size()) +
                           " test windows; evaluation needs at least 4 (use more slots, "
                           "a smaller window, or smaller split fractions)");

    // raw-meter blocks for every test window
    std::vector<WindowBlocks> blocks;
    for (std::size_t wi : ws.test_idx) {
        WindowBlocks b;
        b.raw_input = ws.inputs[wi];
        data::denormalize(ws, b.raw_input);
        b.raw_truth = ws.targets[wi];
        data::denormalize(ws, b.raw_truth);
        b.start = ws.starts[wi];
        blocks.push_back(std::move(b));
    }

    const std::size_t in3 = ds.antennas() * 3;
    const std::size_t t_pre = static_cast<std::size_t>(rc.model.t_pre);
    const ArrayLayout fixed_grid =
        channel::fixed_grid_layout(ds.antennas(), rc.scenario.wavelength, rc.scenario.box);
    const int threads = resolve_threads(rc.threads);

    report::EvalOutputs out;
    std::set<std::string> used_names;
    for (const auto& path : model_paths) {
        model::LoadedModel lm = model::load_model(path);
        if (lm.model->antennas() != ds.antennas())
            throw config_error(path + ": model expects " +
                               std::to_string(lm.model->antennas()) +
                               " antennas, dataset has " + std::to_string(ds.antennas()));
        if (lm.model->config().t_hist_win != rc.model.t_hist_win ||
            lm.model->config().t_pre != rc.model.t_pre)
            throw config_error(path + ": model window geometry (" +
                               std::to_string(lm.model->config().t_hist_win) + "+" +
                               std::to_string(lm.model->config().t_pre) +
                               ") differs from the configured windows");

        std::string name = cfg::model_kind_name(lm.model->kind());
        int suffix = 2;
        while (!used_names.insert(name).second)
            name = cfg::model_kind_name(lm.model->kind()) + "#" + std::to_string(suffix++);

        // predictions in meters for every test window
        std::vector<std::vector<double>> preds;
        long clamped = 0;
        for (const auto& b : blocks) {
            model::Prediction p =
                model::predict(*lm.model, lm.norm, renormalize(b.raw_input, lm.norm));
            clamped += p.clamped;
            preds.push_back(std::move(p.coords));
        }

        report::ModelMetrics mm;
        mm.name = name;
        mm.horizons = rc.eval.horizons;
        for (int h : rc.eval.horizons) {
            std::vector<double> pred_h, truth_h;
            for (std::size_t w = 0; w < blocks.size(); ++w) {
                pred_h.insert(pred_h.end(), preds[w].begin(),
                              preds[w].begin() + static_cast<long>(h * in3));
                truth_h.insert(truth_h.end(), blocks[w].raw_truth.begin(),
                               blocks[w].raw_truth.begin() + static_cast<long>(h * in3));
            }
            mm.nmse_at_horizon.push_back(eval::nmse(pred_h, truth_h));
            mm.accuracy_at_horizon.push_back(
                eval::accuracy_at_threshold(pred_h, truth_h, rc.eval.accuracy_eps));
        }

        std::vector<double> window_mse;
        for (std::size_t w = 0; w < blocks.size(); ++w) {
            double acc = 0.0;
            for (std::size_t i = 0; i < preds[w].size(); ++i) {
                const double d = preds[w][i] - blocks[w].raw_truth[i];
                acc += d * d;
            }
            window_mse.push_back(acc / static_cast<double>(preds[w].size()));
        }
        mm.mse_box = eval::mse_stats(window_mse);

        nn::Tensor timing_input({static_cast<std::size_t>(rc.model.t_hist_win), in3});
        timing_input.data = renormalize(blocks[0].raw_input, lm.norm);
        mm.timing = eval::time_inference(*lm.model, timing_input, rc.eval.timing_runs);
        mm.clamped_fraction = static_cast<double>(clamped) /
                              static_cast<double>(blocks.size() * t_pre * in3);

        // non-overlapping prediction ranges for the secrecy replay
        std::vector<eval::ReplaySlot> slots;
        int next_free = -1;
        for (std::size_t w = 0; w < blocks.size(); ++w) {
            const int pred_begin = blocks[w].start + rc.model.t_hist_win;
            if (pred_begin < next_free) continue;
            next_free = pred_begin + rc.model.t_pre;
            for (std::size_t o = 0; o < t_pre; ++o) {
                if (slots.size() >= static_cast<std::size_t>(rc.eval.replay_slots)) break;
                eval::ReplaySlot rs;
                rs.record_index = pred_begin + static_cast<int>(o);
                rs.predicted.slot_index = rs.record_index;
                for (std::size_t a = 0; a < ds.antennas(); ++a)
                    rs.predicted.positions.push_back(
                        {preds[w][o * in3 + 3 * a], preds[w][o * in3 + 3 * a + 1],
                         preds[w][o * in3 + 3 * a + 2]});
                slots.push_back(std::move(rs));
            }
            if (slots.size() >= static_cast<std::size_t>(rc.eval.replay_slots)) break;
        }
        auto rows = eval::secrecy_replay(name, ds, slots, fixed_grid, rc, threads);
        out.replay.insert(out.replay.end(), rows.begin(), rows.end());
        out.models.push_back(std::move(mm));
    }

    report::write_eval_csvs(out, out_dir);
}

void cmd_gain_pattern(const cfg::RunConfig& rc, const std::string& dataset_path, int slot,
                      const std::string& out_csv) {
    data::Dataset ds = data::load_dataset(dataset_path);
    if (slot < 0 || slot >= ds.slots())
        throw config_error("slot " + std::to_string(slot) + " outside the dataset's " +
                           std::to_string(ds.slots()) + " records");
    const data::SlotRecord& rec = ds.records[static_cast<std::size_t>(slot)];
    const auto& sc = rc.scenario;
    const Vec3 ref = sc.box.center();

    const ArrayLayout fixed_grid =
        channel::fixed_grid_layout(ds.antennas(), sc.wavelength, sc.box);
    const ArrayLayout& optimal = rec.layout;

    const channel::PathSet::Angles bob_ang = channel::los_angles(ref, rec.bob);
    const channel::PathSet::Angles eve_ang = channel::los_angles(ref, rec.eve);

    // pure-LoS channel toward Bob for the MRT variant; MRT normalizes away
    // any common scale, so the Rician prefactor is irrelevant here
    channel::PathSet bob_los;
    bob_los.los_count = 1;
    bob_los.angles.push_back(bob_ang);
    channel::LinkBudget budget = cfg::to_budget(sc);
    Rng rng(0);
    channel::cvec h_bob =
        channel::sample_channel(optimal, {rec.bob, channel::NodeRole::Bob}, bob_los, budget,
                                sc.alpha, sc.beta0, ref, rng);
    channel::cvec w_equal = channel::equal_power_weights(ds.antennas(), sc.power_w);
    channel::cvec w_mrt = channel::mrt_weights(h_bob, sc.power_w);

    std::string csv;
    csv += "# slot " + std::to_string(slot) + "\n";
    csv += "# bob_azimuth_deg " + fmt_double(bob_ang.phi * 180.0 / M_PI, 6) +
           " bob_elevation_deg " + fmt_double(bob_ang.theta * 180.0 / M_PI, 6) + "\n";
    csv += "# eve_azimuth_deg " + fmt_double(eve_ang.phi * 180.0 / M_PI, 6) +
           " eve_elevation_deg " + fmt_double(eve_ang.theta * 180.0 / M_PI, 6) + "\n";
    csv += "phi_deg,fixed_gain,optimized_gain,mrt_gain\n";
    for (int deg = -180; deg <= 180; ++deg) {
        const double phi = deg * M_PI / 180.0;
        const double g_fixed =
            channel::array_pattern_gain(fixed_grid, w_equal, bob_ang.theta, phi, sc.wavelength);
        const double g_opt =
            channel::array_pattern_gain(optimal, w_equal, bob_ang.theta, phi, sc.wavelength);
        const double g_mrt =
            channel::array_pattern_gain(optimal, w_mrt, bob_ang.theta, phi, sc.wavelength);
        csv += std::to_string(deg) + "," + fmt_double(g_fixed, 9) + "," +
               fmt_double(g_opt, 9) + "," + fmt_double(g_mrt, 9) + "\n";
    }
    write_text_file(out_csv, csv);
}

void cmd_report(const std::string& eval_dir, const std::string& out_dir) {
    report::EvalOutputs out = report::read_eval_csvs(eval_dir);
    report::emit_report(out, out_dir);
}

} // namespace mapos::pipeline
