#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "channel.hpp"
#include "error.hpp"
#include "pso.hpp"
#include "textio.hpp"
#include "trajectory.hpp"

namespace mapos::data {

namespace {

// Constraint margin applied during optimization so layouts stay feasible at
// the spec tolerances after their coordinates are rounded to the 9-digit
// on-disk form (worst-case rounding error ~1e-7 m at z ~ 20 m).
constexpr double kQuantMargin = 1e-6;

Vec3 canonical_vec(const Vec3& v) {
    return {canonical9(v.x), canonical9(v.y), canonical9(v.z)};
}

ArrayLayout canonical_layout(const ArrayLayout& l) {
    ArrayLayout out = l;
    for (auto& p : out.positions) p = canonical_vec(p);
    return out;
}

void update_norm_bounds(Dataset& ds) {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};
    for (const auto& r : ds.records) {
        for (const auto& p : r.layout.positions) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
            hi.z = std::max(hi.z, p.z);
        }
    }
    ds.norm_lo = canonical_vec(lo);
    ds.norm_hi = canonical_vec(hi);
    // canonical rounding must not un-bound any stored coordinate
    for (const auto& r : ds.records) {
        for (const auto& p : r.layout.positions) {
            ds.norm_lo.x = std::min(ds.norm_lo.x, p.x);
            ds.norm_lo.y = std::min(ds.norm_lo.y, p.y);
            ds.norm_lo.z = std::min(ds.norm_lo.z, p.z);
            ds.norm_hi.x = std::max(ds.norm_hi.x, p.x);
            ds.norm_hi.y = std::max(ds.norm_hi.y, p.y);
            ds.norm_hi.z = std::max(ds.norm_hi.z, p.z);
        }
    }
}

int iterations_to_converge(const std::vector<double>& history) {
    if (history.empty()) return 0;
    double final_fit = history.back();
    for (std::size_t i = 0; i < history.size(); ++i)
        if (history[i] == final_fit) return static_cast<int>(i);
    return static_cast<int>(history.size()) - 1;
}

} // namespace

Dataset build_dataset(const cfg::RunConfig& config, const ProgressFn& progress) {
    const auto& sc = config.scenario;
    if (config.trajectories.synthetic_layouts) return build_synthetic_dataset(config);

    Dataset ds;
    ds.config = config;

    Rng bob_rng = Rng::substream(config.seed, {1});
    Rng eve_rng = Rng::substream(config.seed, {2});
    std::vector<Vec3> bob_path = traj::generate_trajectory(config.trajectories.bob, bob_rng);
    std::vector<Vec3> eve_path = traj::generate_trajectory(config.trajectories.eve, eve_rng);

    const channel::LinkBudget budget = cfg::to_budget(sc);
    const channel::ChannelScenario scen = cfg::to_channel_scenario(sc);

    pso::SwarmConfig swarm = cfg::to_swarm_config(config);
    swarm.threads = config.threads == 0
                        ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                        : config.threads;
    swarm.d_max_slot = std::max(sc.d_max_slot - kQuantMargin, sc.d_max_slot * 0.5);
    swarm.d_min_ma = sc.d_min_ma + kQuantMargin;

    const int total = config.trajectories.slots;
    ds.records.reserve(static_cast<std::size_t>(total));
    for (int t = 0; t < total; ++t) {
        channel::NodeState bob{bob_path[static_cast<std::size_t>(t)], channel::NodeRole::Bob};
        channel::NodeState eve{eve_path[static_cast<std::size_t>(t)], channel::NodeRole::Eve};

        // Common random numbers per slot: every layout is scored against the
        // same multipath draws, which also keeps the fitness cache coherent.
        const std::uint64_t slot_seed = config.seed;
        const std::uint64_t slot_id = static_cast<std::uint64_t>(t);
        pso::FitnessFn fitness = [&, slot_seed, slot_id](const ArrayLayout& layout) {
            Rng rng = Rng::substream(slot_seed, {3, slot_id});
            return channel::expected_secrecy_rate(layout, bob, eve, budget, scen,
                                                  sc.mc_samples, rng);
        };

        swarm.seed = Rng::substream(config.seed, {4, slot_id}).next_u64();
        const ArrayLayout* prev = t > 0 ? &ds.records.back().layout : nullptr;
        pso::SlotResult res = pso::optimize_slot(fitness, swarm, prev, prev);

        SlotRecord rec;
        rec.t = t;
        rec.bob = canonical_vec(bob.position);
        rec.eve = canonical_vec(eve.position);
        rec.layout = canonical_layout(res.layout);
        rec.layout.slot_index = t;
        rec.secrecy = canonical9(std::max(0.0, res.fit));
        rec.pso_iters = iterations_to_converge(res.history);
        ds.records.push_back(std::move(rec));

        if (progress) progress(t + 1, total, ds.records.back().secrecy);
    }
    update_norm_bounds(ds);
    return ds;
}

Dataset build_synthetic_dataset(const cfg::RunConfig& config, double period_slots,
                                double amplitude_scale) {
    const auto& sc = config.scenario;
    if (period_slots <= 0.0) throw config_error("synthetic dataset needs a positive period");
    if (amplitude_scale < 0.0 || amplitude_scale > 1.0)
        throw config_error("synthetic amplitude scale must be in [0, 1]");

    Dataset ds;
    ds.config = config;

    Rng bob_rng = Rng::substream(config.seed, {1});
    Rng eve_rng = Rng::substream(config.seed, {2});
    std::vector<Vec3> bob_path = traj::generate_trajectory(config.trajectories.bob, bob_rng);
    std::vector<Vec3> eve_path = traj::generate_trajectory(config.trajectories.eve, eve_rng);

    // Base grid spaced at twice the minimum spacing; per-axis sinusoids small
    // enough that any two antennas stay d_min apart and per-slot steps stay
    // under the displacement cap.
    const std::size_t m_ant = sc.antennas;
    std::size_t side = 1;
    while (side * side < m_ant) ++side;
    const double spacing = 2.0 * std::max(sc.d_min_ma, sc.wavelength / 2.0);
    const Vec3 c = sc.box.center();
    const double offset = (static_cast<double>(side) - 1.0) / 2.0;

    double amp_budget = (spacing - sc.d_min_ma) / 2.0 / std::sqrt(3.0);
    double step_budget = (sc.d_max_slot - kQuantMargin) * period_slots /
                         (2.0 * M_PI * std::sqrt(3.0));
    const double amp = amplitude_scale * 0.9 * std::min(amp_budget, step_budget);
    const double omega = 2.0 * M_PI / period_slots;

    Rng phase_rng = Rng::substream(config.seed, {5});
    std::vector<Vec3> phases(m_ant);
    for (auto& ph : phases)
        ph = {phase_rng.uniform(0.0, 2.0 * M_PI), phase_rng.uniform(0.0, 2.0 * M_PI),
              phase_rng.uniform(0.0, 2.0 * M_PI)};

    const channel::LinkBudget budget = cfg::to_budget(sc);
    const channel::ChannelScenario scen = cfg::to_channel_scenario(sc);

    const int total = config.trajectories.slots;
    for (int t = 0; t < total; ++t) {
        ArrayLayout layout;
        layout.slot_index = t;
        layout.positions.reserve(m_ant);
        for (std::size_t m = 0; m < m_ant; ++m) {
            std::size_t row = m / side;
            std::size_t col = m % side;
            Vec3 base{c.x + (static_cast<double>(col) - offset) * spacing,
                      c.y + (static_cast<double>(row) - offset) * spacing, c.z};
            Vec3 p = base + Vec3{amp * std::sin(omega * t + phases[m].x),
                                 amp * std::sin(omega * t + phases[m].y),
                                 amp * std::sin(omega * t + phases[m].z)};
            layout.positions.push_back(sc.box.clamp(p));
        }

        SlotRecord rec;
        rec.t = t;
        rec.bob = canonical_vec(bob_path[static_cast<std::size_t>(t)]);
        rec.eve = canonical_vec(eve_path[static_cast<std::size_t>(t)]);
        rec.layout = canonical_layout(layout);
        rec.layout.slot_index = t;
        channel::NodeState bob{rec.bob, channel::NodeRole::Bob};
        channel::NodeState eve{rec.eve, channel::NodeRole::Eve};
        Rng fit_rng = Rng::substream(config.seed, {3, static_cast<std::uint64_t>(t)});
        rec.secrecy = canonical9(channel::expected_secrecy_rate(
            rec.layout, bob, eve, budget, scen, sc.mc_samples, fit_rng));
        rec.pso_iters = 0;

        FeasibilityReport feas =
            check_layout(rec.layout, sc.box, sc.d_min_ma,
                         t > 0 ? &ds.records.back().layout : nullptr, sc.d_max_slot);
        if (!feas.ok)
            throw numeric_error("synthetic layout infeasible at slot " + std::to_string(t) +
                                ": " + feas.violation);
        ds.records.push_back(std::move(rec));
    }
    update_norm_bounds(ds);
    return ds;
}

namespace {

std::string record_line(const SlotRecord& r) {
    std::string s = std::to_string(r.t);
    auto add = [&s](double v) { s += "," + fmt_double(v, 9); };
    add(r.bob.x);
    add(r.bob.y);
    add(r.bob.z);
    add(r.eve.x);
    add(r.eve.y);
    add(r.eve.z);
    for (const auto& p : r.layout.positions) {
        add(p.x);
        add(p.y);
        add(p.z);
    }
    add(r.secrecy);
    s += "," + std::to_string(r.pso_iters);
    return s;
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::string out;
    out += "MAPD v1\n";
    out += "meta units = " + ds.units + "\n";
    out += "meta antennas = " + std::to_string(ds.antennas()) + "\n";
    out += "meta slots = " + std::to_string(ds.slots()) + "\n";
    out += "meta norm_lo = " + fmt_double(ds.norm_lo.x) + " " + fmt_double(ds.norm_lo.y) +
           " " + fmt_double(ds.norm_lo.z) + "\n";
    out += "meta norm_hi = " + fmt_double(ds.norm_hi.x) + " " + fmt_double(ds.norm_hi.y) +
           " " + fmt_double(ds.norm_hi.z) + "\n";
    for (const auto& [k, v] : cfg::config_snapshot(ds.config))
        out += "meta cfg " + k + " = " + v + "\n";
    out += "records " + std::to_string(ds.records.size()) + "\n";
    for (const auto& r : ds.records) out += record_line(r) + "\n";
    write_text_file(path, out);
}

Dataset load_dataset(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> lines = split(text, '\n');
    if (lines.empty() || lines[0].rfind("MAPD", 0) != 0)
        throw io_error(path + ": malformed header: expected 'MAPD v1' magic");
    {
        std::string ver = trim(lines[0].substr(4));
        if (ver != "v1")
            throw io_error(path + ": unsupported dataset version '" + ver +
                           "'; this build reads 'v1'");
    }

    Dataset ds;
    std::vector<std::pair<std::string, std::string>> cfg_kv;
    long long declared_records = -1;
    std::size_t i = 1;
    for (; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.rfind("records", 0) == 0) {
            if (!parse_int(trim(line.substr(7)), &declared_records))
                throw io_error(path + ": malformed record count line '" + line + "'");
            ++i;
            break;
        }
        if (line.rfind("meta ", 0) != 0)
            throw io_error(path + ": malformed metadata line " + std::to_string(i + 1) +
                           ": '" + line + "'");
        std::string rest = line.substr(5);
        std::size_t eq = rest.find('=');
        if (eq == std::string::npos)
            throw io_error(path + ": metadata line " + std::to_string(i + 1) +
                           " missing '='");
        std::string key = trim(rest.substr(0, eq));
        std::string value = trim(rest.substr(eq + 1));
        if (key == "units") {
            ds.units = value;
        } else if (key == "antennas" || key == "slots") {
            // redundant with config + record count; validated after parsing
        } else if (key == "norm_lo" || key == "norm_hi") {
            auto toks = tokens(value);
            Vec3 v;
            if (toks.size() != 3 || !parse_double(toks[0], &v.x) ||
                !parse_double(toks[1], &v.y) || !parse_double(toks[2], &v.z))
                throw io_error(path + ": malformed " + key + " in metadata");
            (key == "norm_lo" ? ds.norm_lo : ds.norm_hi) = v;
        } else if (key.rfind("cfg ", 0) == 0) {
            cfg_kv.emplace_back(trim(key.substr(4)), value);
        } else {
            throw io_error(path + ": unknown metadata key '" + key + "'");
        }
    }
    if (declared_records < 0) throw io_error(path + ": missing 'records' marker");
    ds.config = cfg::config_from_snapshot(cfg_kv);

    const std::size_t m_ant = ds.config.scenario.antennas;
    const std::size_t fields = 1 + 6 + 3 * m_ant + 2;
    for (; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        auto parts = split(line, ',');
        if (parts.size() != fields)
            throw io_error(path + ": record line " + std::to_string(i + 1) + " has " +
                           std::to_string(parts.size()) + " fields, expected " +
                           std::to_string(fields));
        SlotRecord r;
        long long tt;
        if (!parse_int(parts[0], &tt))
            throw io_error(path + ": record line " + std::to_string(i + 1) + ": bad slot index");
        r.t = static_cast<int>(tt);
        auto fd = [&](std::size_t idx) {
            double v;
            if (!parse_double(parts[idx], &v))
                throw io_error(path + ": record line " + std::to_string(i + 1) +
                               ": bad number '" + parts[idx] + "'");
            return v;
        };
        r.bob = {fd(1), fd(2), fd(3)};
        r.eve = {fd(4), fd(5), fd(6)};
        r.layout.slot_index = r.t;
        r.layout.positions.resize(m_ant);
        for (std::size_t m = 0; m < m_ant; ++m)
            r.layout.positions[m] = {fd(7 + 3 * m), fd(8 + 3 * m), fd(9 + 3 * m)};
        r.secrecy = fd(fields - 2);
        long long iters;
        if (!parse_int(parts[fields - 1], &iters))
            throw io_error(path + ": record line " + std::to_string(i + 1) + ": bad iteration count");
        r.pso_iters = static_cast<int>(iters);
        ds.records.push_back(std::move(r));
    }

    if (static_cast<long long>(ds.records.size()) != declared_records)
        throw io_error(path + ": truncated dataset: header declares " +
                       std::to_string(declared_records) + " records, found " +
                       std::to_string(ds.records.size()));
    for (std::size_t k = 0; k < ds.records.size(); ++k)
        if (ds.records[k].t != static_cast<int>(k))
            throw io_error(path + ": records are not contiguous at slot " +
                           std::to_string(ds.records[k].t));
    for (const auto& r : ds.records) {
        for (const auto& p : r.layout.positions) {
            if (p.x < ds.norm_lo.x || p.x > ds.norm_hi.x || p.y < ds.norm_lo.y ||
                p.y > ds.norm_hi.y || p.z < ds.norm_lo.z || p.z > ds.norm_hi.z)
                throw io_error(path + ": normalization bounds do not bound record " +
                               std::to_string(r.t));
        }
    }
    return ds;
}

WindowSet split_windows(const Dataset& ds, int t_hist, int t_pre, int stride,
                        double val_fraction, double test_fraction) {
    if (t_hist < 1 || t_pre < 1 || stride < 1)
        throw config_error("window sizes and stride must be >= 1");
    const int n = ds.slots();
    const int w = t_hist + t_pre;
    if (w > n)
        throw config_error("window of " + std::to_string(w) +
                           " slots exceeds dataset length " + std::to_string(n));

    WindowSet ws;
    ws.t_hist = t_hist;
    ws.t_pre = t_pre;
    ws.antennas = ds.antennas();
    ws.clamp_box = ds.config.scenario.box;

    const int n_val = static_cast<int>(std::lround(val_fraction * n));
    const int n_test = static_cast<int>(std::lround(test_fraction * n));
    const int n_train = n - n_val - n_test;
    if (n_train < 1) throw config_error("split fractions leave no training records");
    // partition boundaries in record indices: [0,n_train) [n_train,n_train+n_val) [.,n)
    const int val_begin = n_train;
    const int test_begin = n_train + n_val;

    for (int start = 0; start + w <= n; start += stride) ws.starts.push_back(start);

    // training-partition normalization statistics
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (int t = 0; t < n_train; ++t) {
        for (const auto& p : ds.records[static_cast<std::size_t>(t)].layout.positions) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
            hi.z = std::max(hi.z, p.z);
        }
    }
    ws.norm_lo = lo;
    Vec3 span = hi - lo;
    // constant axes normalize to 0 and denormalize back exactly
    ws.norm_span = {span.x > 1e-15 ? span.x : 1.0, span.y > 1e-15 ? span.y : 1.0,
                    span.z > 1e-15 ? span.z : 1.0};

    auto push_window = [&](int start) {
        std::vector<double> x, y;
        x.reserve(static_cast<std::size_t>(t_hist) * ws.antennas * 3);
        y.reserve(static_cast<std::size_t>(t_pre) * ws.antennas * 3);
        for (int t = start; t < start + t_hist; ++t)
            for (const auto& p : ds.records[static_cast<std::size_t>(t)].layout.positions) {
                x.push_back((p.x - ws.norm_lo.x) / ws.norm_span.x);
                x.push_back((p.y - ws.norm_lo.y) / ws.norm_span.y);
                x.push_back((p.z - ws.norm_lo.z) / ws.norm_span.z);
            }
        for (int t = start + t_hist; t < start + w; ++t)
            for (const auto& p : ds.records[static_cast<std::size_t>(t)].layout.positions) {
                y.push_back((p.x - ws.norm_lo.x) / ws.norm_span.x);
                y.push_back((p.y - ws.norm_lo.y) / ws.norm_span.y);
                y.push_back((p.z - ws.norm_lo.z) / ws.norm_span.z);
            }
        ws.inputs.push_back(std::move(x));
        ws.targets.push_back(std::move(y));
    };

    for (std::size_t wi = 0; wi < ws.starts.size(); ++wi) {
        int start = ws.starts[wi];
        int end = start + w; // exclusive
        push_window(start);
        if (end <= val_begin)
            ws.train_idx.push_back(wi);
        else if (start >= val_begin && end <= test_begin)
            ws.val_idx.push_back(wi);
        else if (start >= test_begin)
            ws.test_idx.push_back(wi);
        // windows straddling a boundary belong to no partition
    }
    return ws;
}

void denormalize(const WindowSet& ws, std::vector<double>& coords) {
    const double lo[3] = {ws.norm_lo.x, ws.norm_lo.y, ws.norm_lo.z};
    const double span[3] = {ws.norm_span.x, ws.norm_span.y, ws.norm_span.z};
    for (std::size_t i = 0; i < coords.size(); ++i)
        coords[i] = coords[i] * span[i % 3] + lo[i % 3];
}

void normalize_inplace(const WindowSet& ws, std::vector<double>& coords) {
    const double lo[3] = {ws.norm_lo.x, ws.norm_lo.y, ws.norm_lo.z};
    const double span[3] = {ws.norm_span.x, ws.norm_span.y, ws.norm_span.z};
    for (std::size_t i = 0; i < coords.size(); ++i)
        coords[i] = (coords[i] - lo[i % 3]) / span[i % 3];
}

} // namespace mapos::data
