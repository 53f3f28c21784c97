#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "error.hpp"
#include "textio.hpp"

namespace mapos::cfg {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kTableWavelength = 0.0107; // rounded value the derived one must match
constexpr double kWavelengthTol = 1e-4;

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "scenario.antennas", "scenario.frequency_ghz", "scenario.wavelength_m",
        "scenario.beta0", "scenario.alpha", "scenario.rician_kappa",
        "scenario.los_paths", "scenario.nlos_paths", "scenario.noise_w",
        "scenario.power_w", "scenario.bs_height_m", "scenario.box_extent_wl",
        "scenario.box_lo_m", "scenario.box_hi_m", "scenario.slot_step_wl",
        "scenario.slot_step_m", "scenario.min_spacing_wl", "scenario.min_spacing_m",
        "scenario.mc_samples",
        "swarm.particles", "swarm.iterations", "swarm.c1", "swarm.c2",
        "swarm.omega_max", "swarm.omega_min", "swarm.per_coordinate_random",
        "swarm.polish_rounds",
        "trajectories.slots", "trajectories.dt_s", "trajectories.synthetic_layouts",
        "trajectories.bob_kind", "trajectories.bob_start_m", "trajectories.bob_end_m",
        "trajectories.bob_amplitude_m", "trajectories.bob_period_slots",
        "trajectories.bob_phases_rad", "trajectories.bob_step_std_m",
        "trajectories.eve_kind", "trajectories.eve_start_m", "trajectories.eve_end_m",
        "trajectories.eve_amplitude_m", "trajectories.eve_period_slots",
        "trajectories.eve_phases_rad", "trajectories.eve_step_std_m",
        "model.kind", "model.t_hist_win", "model.t_pre", "model.lstm_hidden",
        "model.d_model", "model.heads", "model.dropout", "model.bilstm_hidden",
        "model.attention_axis", "model.learning_rate", "model.epochs", "model.batch",
        "model.train_stride", "model.val_fraction", "model.test_fraction",
        "model.narx_delay", "model.narx_hidden", "model.lstm_only_hidden",
        "model.lstm_only_layers", "model.transformer_blocks", "model.transformer_ff",
        "eval.accuracy_eps_m", "eval.horizons", "eval.alpha_grid", "eval.noise_grid_w",
        "eval.power_grid_w", "eval.replay_slots", "eval.replay_nlos", "eval.timing_runs",
        "run.seed", "run.threads",
    };
    return keys;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest_key(const std::string& key) {
    std::size_t best = static_cast<std::size_t>(-1);
    std::string who;
    for (const auto& k : known_keys()) {
        std::size_t d = levenshtein(key, k);
        if (d < best) {
            best = d;
            who = k;
        }
    }
    return who;
}

struct RawConfig {
    std::map<std::string, std::string> values; // "section.key" -> text
    std::map<std::string, int> lines;          // for error reporting
    std::string origin;

    bool has(const std::string& k) const { return values.count(k) > 0; }

    [[noreturn]] void fail(const std::string& k, const std::string& why) const {
        auto it = lines.find(k);
        std::string where = origin + (it != lines.end() ? ":" + std::to_string(it->second) : "");
        throw config_error(where + ": key '" + k + "': " + why);
    }

    double get_double(const std::string& k, double def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        double v;
        if (!parse_double(it->second, &v)) fail(k, "expected a number, got '" + it->second + "'");
        return v;
    }

    long long get_int(const std::string& k, long long def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        long long v;
        if (!parse_int(it->second, &v)) fail(k, "expected an integer, got '" + it->second + "'");
        return v;
    }

    std::uint64_t get_u64(const std::string& k, std::uint64_t def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        std::string t = trim(it->second);
        char* end = nullptr;
        std::uint64_t v = std::strtoull(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size()) fail(k, "expected an unsigned integer, got '" + t + "'");
        return v;
    }

    bool get_bool(const std::string& k, bool def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        std::string t = trim(it->second);
        if (t == "true" || t == "1") return true;
        if (t == "false" || t == "0") return false;
        fail(k, "expected true/false, got '" + t + "'");
    }

    std::string get_string(const std::string& k, const std::string& def) const {
        auto it = values.find(k);
        return it == values.end() ? def : trim(it->second);
    }

    Vec3 get_vec3(const std::string& k, const Vec3& def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        auto toks = tokens(it->second);
        Vec3 v;
        if (toks.size() != 3 || !parse_double(toks[0], &v.x) || !parse_double(toks[1], &v.y) ||
            !parse_double(toks[2], &v.z))
            fail(k, "expected three numbers, got '" + it->second + "'");
        return v;
    }

    std::vector<double> get_double_list(const std::string& k, std::vector<double> def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        std::vector<double> out;
        for (const auto& t : tokens(it->second)) {
            double v;
            if (!parse_double(t, &v)) fail(k, "expected numbers, got '" + t + "'");
            out.push_back(v);
        }
        if (out.empty()) fail(k, "expected at least one number");
        return out;
    }

    std::vector<int> get_int_list(const std::string& k, std::vector<int> def) const {
        auto it = values.find(k);
        if (it == values.end()) return def;
        std::vector<int> out;
        for (const auto& t : tokens(it->second)) {
            long long v;
            if (!parse_int(t, &v)) fail(k, "expected integers, got '" + t + "'");
            out.push_back(static_cast<int>(v));
        }
        if (out.empty()) fail(k, "expected at least one integer");
        return out;
    }
};

RawConfig lex_config(const std::string& text, const std::string& origin) {
    RawConfig raw;
    raw.origin = origin;
    std::string section;
    int line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        std::string s = line;
        std::size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw config_error(origin + ":" + std::to_string(line_no) +
                                   ": malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(line_no) +
                               ": expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw config_error(origin + ":" + std::to_string(line_no) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        const auto& known = known_keys();
        if (std::find(known.begin(), known.end(), full) == known.end())
            throw config_error(origin + ":" + std::to_string(line_no) + ": unknown key '" +
                               full + "'; nearest valid key is '" + nearest_key(full) + "'");
        if (raw.values.count(full))
            throw config_error(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                               full + "' (first at line " +
                               std::to_string(raw.lines.at(full)) + ")");
        raw.values[full] = value;
        raw.lines[full] = line_no;
    }
    return raw;
}

TrajectoryKind parse_traj_kind(const RawConfig& raw, const std::string& key,
                               TrajectoryKind def) {
    std::string s = raw.get_string(key, "");
    if (s.empty()) return def;
    if (s == "waypoint_linear") return TrajectoryKind::WaypointLinear;
    if (s == "parametric_sinusoid") return TrajectoryKind::ParametricSinusoid;
    if (s == "random_walk") return TrajectoryKind::RandomWalk;
    raw.fail(key, "expected waypoint_linear | parametric_sinusoid | random_walk, got '" + s + "'");
}

std::string traj_kind_name(TrajectoryKind k) {
    switch (k) {
        case TrajectoryKind::WaypointLinear: return "waypoint_linear";
        case TrajectoryKind::ParametricSinusoid: return "parametric_sinusoid";
        case TrajectoryKind::RandomWalk: return "random_walk";
    }
    return "waypoint_linear";
}

TrajectorySpec read_traj(const RawConfig& raw, const std::string& who,
                         const TrajectorySpec& def) {
    TrajectorySpec t = def;
    std::string p = "trajectories." + who + "_";
    t.kind = parse_traj_kind(raw, p + "kind", def.kind);
    t.start = raw.get_vec3(p + "start_m", def.start);
    t.end = raw.get_vec3(p + "end_m", def.end);
    t.amplitude = raw.get_vec3(p + "amplitude_m", def.amplitude);
    t.period_slots = raw.get_double(p + "period_slots", def.period_slots);
    t.phases = raw.get_vec3(p + "phases_rad", def.phases);
    t.step_std = raw.get_double(p + "step_std_m", def.step_std);
    return t;
}

void validate(const RunConfig& c) {
    const auto& s = c.scenario;
    auto req = [](bool ok, const std::string& msg) {
        if (!ok) throw config_error("config validation: " + msg);
    };
    req(s.antennas >= 1, "scenario.antennas must be >= 1");
    req(s.wavelength > 0, "wavelength must be positive");
    req(s.beta0 > 0, "scenario.beta0 must be positive");
    req(s.rician_kappa >= 0, "scenario.rician_kappa must be >= 0");
    req(s.los_paths >= 0 && s.nlos_paths >= 0 && s.los_paths + s.nlos_paths >= 1,
        "scenario needs at least one propagation path");
    req(s.noise_w > 0, "scenario.noise_w must be positive");
    req(s.power_w > 0, "scenario.power_w must be positive");
    req(s.box.lo.x <= s.box.hi.x && s.box.lo.y <= s.box.hi.y && s.box.lo.z <= s.box.hi.z,
        "movement box is empty");
    req(s.d_max_slot > 0, "per-slot step cap must be positive");
    req(s.d_min_ma >= 0, "minimum spacing must be >= 0");
    req(s.mc_samples >= 1, "scenario.mc_samples must be >= 1");
    req(c.swarm.particles >= 1, "swarm.particles must be >= 1");
    req(c.swarm.iterations >= 0, "swarm.iterations must be >= 0");
    req(c.swarm.omega_max >= c.swarm.omega_min && c.swarm.omega_min > 0,
        "swarm inertia bounds need omega_max >= omega_min > 0");
    req(c.swarm.c1 >= 0 && c.swarm.c2 >= 0, "swarm learning coefficients must be >= 0");
    req(c.swarm.polish_rounds >= 0, "swarm.polish_rounds must be >= 0");
    req(c.trajectories.slots >= 1, "trajectories.slots must be >= 1");
    const auto& m = c.model;
    req(m.t_hist_win >= 1 && m.t_pre >= 1, "model window sizes must be >= 1");
    req(m.lstm_hidden >= 1 && m.d_model >= 1 && m.heads >= 1 && m.bilstm_hidden >= 1,
        "model sizes must be >= 1");
    req(m.d_model % m.heads == 0, "model.d_model must be divisible by model.heads");
    req(m.dropout >= 0 && m.dropout < 1, "model.dropout must be in [0, 1)");
    req(m.learning_rate > 0, "model.learning_rate must be positive");
    req(m.epochs >= 1 && m.batch >= 1 && m.train_stride >= 1,
        "model training sizes must be >= 1");
    req(m.val_fraction > 0 && m.test_fraction > 0 &&
            m.val_fraction + m.test_fraction < 1.0,
        "split fractions must be positive and leave room for training data");
    req(m.narx_delay >= 1 && m.narx_hidden >= 1, "NARX sizes must be >= 1");
    req(c.eval.accuracy_eps > 0, "eval.accuracy_eps_m must be positive");
    for (int h : c.eval.horizons)
        req(h >= 1, "eval.horizons entries must be >= 1");
    req(c.eval.replay_slots >= 1, "eval.replay_slots must be >= 1");
    req(c.eval.replay_nlos >= 0, "eval.replay_nlos must be >= 0");
    req(c.eval.timing_runs >= 10, "eval.timing_runs must be >= 10");
    req(c.threads >= 0, "run.threads must be >= 0");
}

RunConfig materialize(const RawConfig& raw) {
    RunConfig c;
    auto& s = c.scenario;
    s.antennas = static_cast<std::size_t>(raw.get_int("scenario.antennas", 9));
    s.frequency_ghz = raw.get_double("scenario.frequency_ghz", 28.0);

    double derived_wl = kSpeedOfLight / (s.frequency_ghz * 1e9);
    if (raw.has("scenario.wavelength_m")) {
        double given = raw.get_double("scenario.wavelength_m", 0.0);
        if (raw.has("scenario.frequency_ghz") && std::abs(given - derived_wl) > kWavelengthTol)
            raw.fail("scenario.wavelength_m",
                     "inconsistent with frequency: c/F = " + fmt_double(derived_wl) +
                         " m but wavelength_m = " + fmt_double(given) + " m (tolerance " +
                         fmt_double(kWavelengthTol) + ")");
        s.wavelength = given;
    } else {
        s.wavelength = derived_wl;
        if (std::abs(s.wavelength - kTableWavelength) > kWavelengthTol && s.frequency_ghz == 28.0)
            throw config_error("derived wavelength drifted from expected 0.0107 m");
    }

    s.beta0 = raw.get_double("scenario.beta0", 1e-3);
    s.alpha = raw.get_double("scenario.alpha", 2.8);
    s.rician_kappa = raw.get_double("scenario.rician_kappa", 10.0);
    s.los_paths = static_cast<int>(raw.get_int("scenario.los_paths", 1));
    s.nlos_paths = static_cast<int>(raw.get_int("scenario.nlos_paths", 4));
    s.noise_w = raw.get_double("scenario.noise_w", 1e-5);
    s.power_w = raw.get_double("scenario.power_w", 1.0);
    s.bs_height = raw.get_double("scenario.bs_height_m", 20.0);
    s.mc_samples = static_cast<int>(raw.get_int("scenario.mc_samples", 16));

    if (raw.has("scenario.box_lo_m") || raw.has("scenario.box_hi_m")) {
        s.box.lo = raw.get_vec3("scenario.box_lo_m", Vec3{});
        s.box.hi = raw.get_vec3("scenario.box_hi_m", Vec3{});
    } else {
        double half = raw.get_double("scenario.box_extent_wl", 10.0) * s.wavelength / 2.0;
        Vec3 center{0.0, 0.0, s.bs_height};
        s.box.lo = center - Vec3{half, half, half};
        s.box.hi = center + Vec3{half, half, half};
    }

    s.d_max_slot = raw.has("scenario.slot_step_m")
                       ? raw.get_double("scenario.slot_step_m", 0.0)
                       : raw.get_double("scenario.slot_step_wl", 0.25) * s.wavelength;
    s.d_min_ma = raw.has("scenario.min_spacing_m")
                     ? raw.get_double("scenario.min_spacing_m", 0.0)
                     : raw.get_double("scenario.min_spacing_wl", 0.5) * s.wavelength;

    c.swarm.particles = static_cast<int>(raw.get_int("swarm.particles", 50));
    c.swarm.iterations = static_cast<int>(raw.get_int("swarm.iterations", 60));
    c.swarm.c1 = raw.get_double("swarm.c1", 1.49445);
    c.swarm.c2 = raw.get_double("swarm.c2", 1.49445);
    c.swarm.omega_max = raw.get_double("swarm.omega_max", 0.9);
    c.swarm.omega_min = raw.get_double("swarm.omega_min", 0.4);
    c.swarm.per_coordinate_random = raw.get_bool("swarm.per_coordinate_random", false);
    c.swarm.polish_rounds = static_cast<int>(raw.get_int("swarm.polish_rounds", 2));

    c.trajectories.slots = static_cast<int>(raw.get_int("trajectories.slots", 600));
    c.trajectories.dt = raw.get_double("trajectories.dt_s", 0.1);
    c.trajectories.synthetic_layouts = raw.get_bool("trajectories.synthetic_layouts", false);

    // Eve flies strictly nearer to the array than Bob at every slot; in that
    // regime the pure-LoS secrecy rate is provably monotone in the path-loss
    // exponent, which the replay sweeps assert point-wise.
    TrajectorySpec bob_def;
    bob_def.kind = TrajectoryKind::RandomWalk;
    bob_def.start = {30, 0, 30};
    bob_def.end = {30, 0, 30};
    bob_def.amplitude = {2, 0, 3};
    bob_def.period_slots = 150;
    bob_def.phases = {0.0, 1.5707963, 0.7853982};
    bob_def.step_std = 0.8;
    TrajectorySpec eve_def;
    eve_def.kind = TrajectoryKind::WaypointLinear;
    eve_def.start = {-6, 4, 24};
    eve_def.end = {-5, -4, 24.5};
    c.trajectories.bob = read_traj(raw, "bob", bob_def);
    c.trajectories.eve = read_traj(raw, "eve", eve_def);
    c.trajectories.bob.slots = c.trajectories.slots;
    c.trajectories.eve.slots = c.trajectories.slots;
    c.trajectories.bob.dt = c.trajectories.dt;
    c.trajectories.eve.dt = c.trajectories.dt;

    auto& m = c.model;
    std::string kind = raw.get_string("model.kind", "proposed");
    m.kind = parse_model_kind(kind);
    m.t_hist_win = static_cast<int>(raw.get_int("model.t_hist_win", 20));
    m.t_pre = static_cast<int>(raw.get_int("model.t_pre", 60));
    m.lstm_hidden = static_cast<int>(raw.get_int("model.lstm_hidden", 12));
    m.d_model = static_cast<int>(raw.get_int("model.d_model", 32));
    m.heads = static_cast<int>(raw.get_int("model.heads", 4));
    m.dropout = raw.get_double("model.dropout", 0.05);
    m.bilstm_hidden = static_cast<int>(raw.get_int("model.bilstm_hidden", 24));
    std::string axis = raw.get_string("model.attention_axis", "time");
    if (axis == "time") {
        m.attention_over_antennas = false;
    } else if (axis == "antenna") {
        m.attention_over_antennas = true;
    } else {
        raw.fail("model.attention_axis", "expected time | antenna, got '" + axis + "'");
    }
    m.learning_rate = raw.get_double("model.learning_rate", 0.001);
    m.epochs = static_cast<int>(raw.get_int("model.epochs", 100));
    m.batch = static_cast<int>(raw.get_int("model.batch", 32));
    m.train_stride = static_cast<int>(raw.get_int("model.train_stride", 2));
    m.val_fraction = raw.get_double("model.val_fraction", 0.15);
    m.test_fraction = raw.get_double("model.test_fraction", 0.15);
    m.narx_delay = static_cast<int>(raw.get_int("model.narx_delay", 5));
    m.narx_hidden = static_cast<int>(raw.get_int("model.narx_hidden", 32));
    m.lstm_only_hidden = static_cast<int>(raw.get_int("model.lstm_only_hidden", 48));
    m.lstm_only_layers = static_cast<int>(raw.get_int("model.lstm_only_layers", 2));
    m.transformer_blocks = static_cast<int>(raw.get_int("model.transformer_blocks", 2));
    m.transformer_ff = static_cast<int>(raw.get_int("model.transformer_ff", 64));

    auto& e = c.eval;
    e.accuracy_eps = raw.get_double("eval.accuracy_eps_m", 0.0005);
    e.horizons = raw.get_int_list("eval.horizons", e.horizons);
    e.alpha_grid = raw.get_double_list("eval.alpha_grid", e.alpha_grid);
    e.noise_grid = raw.get_double_list("eval.noise_grid_w", e.noise_grid);
    e.power_grid = raw.get_double_list("eval.power_grid_w", e.power_grid);
    e.replay_slots = static_cast<int>(raw.get_int("eval.replay_slots", 20));
    e.replay_nlos = static_cast<int>(raw.get_int("eval.replay_nlos", 0));
    e.timing_runs = static_cast<int>(raw.get_int("eval.timing_runs", 30));

    c.seed = raw.get_u64("run.seed", 20240801ULL);
    c.threads = static_cast<int>(raw.get_int("run.threads", 0));

    validate(c);
    return c;
}

} // namespace

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Proposed: return "proposed";
        case ModelKind::LstmOnly: return "lstm";
        case ModelKind::TransformerOnly: return "transformer";
        case ModelKind::Narx: return "narx";
    }
    return "proposed";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "proposed") return ModelKind::Proposed;
    if (name == "lstm") return ModelKind::LstmOnly;
    if (name == "transformer") return ModelKind::TransformerOnly;
    if (name == "narx") return ModelKind::Narx;
    throw config_error("unknown model kind '" + name +
                       "'; expected proposed | lstm | transformer | narx");
}

RunConfig default_config() { return materialize(lex_config("", "<defaults>")); }

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    return materialize(lex_config(text, origin));
}

RunConfig parse_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path), path);
}

std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto d = [](double v) { return fmt_double(v); };
    auto v3 = [](const Vec3& v) {
        return fmt_double(v.x) + " " + fmt_double(v.y) + " " + fmt_double(v.z);
    };
    auto dlist = [](const std::vector<double>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + fmt_double(xs[i]);
        return s;
    };
    auto ilist = [](const std::vector<int>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + std::to_string(xs[i]);
        return s;
    };
    const auto& s = c.scenario;
    kv.emplace_back("scenario.antennas", std::to_string(s.antennas));
    kv.emplace_back("scenario.frequency_ghz", d(s.frequency_ghz));
    kv.emplace_back("scenario.wavelength_m", d(s.wavelength));
    kv.emplace_back("scenario.beta0", d(s.beta0));
    kv.emplace_back("scenario.alpha", d(s.alpha));
    kv.emplace_back("scenario.rician_kappa", d(s.rician_kappa));
    kv.emplace_back("scenario.los_paths", std::to_string(s.los_paths));
    kv.emplace_back("scenario.nlos_paths", std::to_string(s.nlos_paths));
    kv.emplace_back("scenario.noise_w", d(s.noise_w));
    kv.emplace_back("scenario.power_w", d(s.power_w));
    kv.emplace_back("scenario.bs_height_m", d(s.bs_height));
    kv.emplace_back("scenario.box_lo_m", v3(s.box.lo));
    kv.emplace_back("scenario.box_hi_m", v3(s.box.hi));
    kv.emplace_back("scenario.slot_step_m", d(s.d_max_slot));
    kv.emplace_back("scenario.min_spacing_m", d(s.d_min_ma));
    kv.emplace_back("scenario.mc_samples", std::to_string(s.mc_samples));
    kv.emplace_back("swarm.particles", std::to_string(c.swarm.particles));
    kv.emplace_back("swarm.iterations", std::to_string(c.swarm.iterations));
    kv.emplace_back("swarm.c1", d(c.swarm.c1));
    kv.emplace_back("swarm.c2", d(c.swarm.c2));
    kv.emplace_back("swarm.omega_max", d(c.swarm.omega_max));
    kv.emplace_back("swarm.omega_min", d(c.swarm.omega_min));
    kv.emplace_back("swarm.per_coordinate_random",
                    c.swarm.per_coordinate_random ? "true" : "false");
    kv.emplace_back("swarm.polish_rounds", std::to_string(c.swarm.polish_rounds));
    kv.emplace_back("trajectories.slots", std::to_string(c.trajectories.slots));
    kv.emplace_back("trajectories.dt_s", d(c.trajectories.dt));
    kv.emplace_back("trajectories.synthetic_layouts",
                    c.trajectories.synthetic_layouts ? "true" : "false");
    auto emit_traj = [&](const std::string& who, const TrajectorySpec& t) {
        std::string p = "trajectories." + who + "_";
        kv.emplace_back(p + "kind", traj_kind_name(t.kind));
        kv.emplace_back(p + "start_m", v3(t.start));
        kv.emplace_back(p + "end_m", v3(t.end));
        kv.emplace_back(p + "amplitude_m", v3(t.amplitude));
        kv.emplace_back(p + "period_slots", d(t.period_slots));
        kv.emplace_back(p + "phases_rad", v3(t.phases));
        kv.emplace_back(p + "step_std_m", d(t.step_std));
    };
    emit_traj("bob", c.trajectories.bob);
    emit_traj("eve", c.trajectories.eve);
    const auto& m = c.model;
    kv.emplace_back("model.kind", model_kind_name(m.kind));
    kv.emplace_back("model.t_hist_win", std::to_string(m.t_hist_win));
    kv.emplace_back("model.t_pre", std::to_string(m.t_pre));
    kv.emplace_back("model.lstm_hidden", std::to_string(m.lstm_hidden));
    kv.emplace_back("model.d_model", std::to_string(m.d_model));
    kv.emplace_back("model.heads", std::to_string(m.heads));
    kv.emplace_back("model.dropout", d(m.dropout));
    kv.emplace_back("model.bilstm_hidden", std::to_string(m.bilstm_hidden));
    kv.emplace_back("model.attention_axis", m.attention_over_antennas ? "antenna" : "time");
    kv.emplace_back("model.learning_rate", d(m.learning_rate));
    kv.emplace_back("model.epochs", std::to_string(m.epochs));
    kv.emplace_back("model.batch", std::to_string(m.batch));
    kv.emplace_back("model.train_stride", std::to_string(m.train_stride));
    kv.emplace_back("model.val_fraction", d(m.val_fraction));
    kv.emplace_back("model.test_fraction", d(m.test_fraction));
    kv.emplace_back("model.narx_delay", std::to_string(m.narx_delay));
    kv.emplace_back("model.narx_hidden", std::to_string(m.narx_hidden));
    kv.emplace_back("model.lstm_only_hidden", std::to_string(m.lstm_only_hidden));
    kv.emplace_back("model.lstm_only_layers", std::to_string(m.lstm_only_layers));
    kv.emplace_back("model.transformer_blocks", std::to_string(m.transformer_blocks));
    kv.emplace_back("model.transformer_ff", std::to_string(m.transformer_ff));
    kv.emplace_back("eval.accuracy_eps_m", d(c.eval.accuracy_eps));
    kv.emplace_back("eval.horizons", ilist(c.eval.horizons));
    kv.emplace_back("eval.alpha_grid", dlist(c.eval.alpha_grid));
    kv.emplace_back("eval.noise_grid_w", dlist(c.eval.noise_grid));
    kv.emplace_back("eval.power_grid_w", dlist(c.eval.power_grid));
    kv.emplace_back("eval.replay_slots", std::to_string(c.eval.replay_slots));
    kv.emplace_back("eval.replay_nlos", std::to_string(c.eval.replay_nlos));
    kv.emplace_back("eval.timing_runs", std::to_string(c.eval.timing_runs));
    kv.emplace_back("run.seed", std::to_string(c.seed));
    kv.emplace_back("run.threads", std::to_string(c.threads));
    return kv;
}

RunConfig config_from_snapshot(const std::vector<std::pair<std::string, std::string>>& kv) {
    RawConfig raw;
    raw.origin = "<snapshot>";
    int i = 0;
    for (const auto& [k, v] : kv) {
        raw.values[k] = v;
        raw.lines[k] = ++i;
    }
    return materialize(raw);
}

channel::LinkBudget to_budget(const ScenarioConfig& s) {
    channel::LinkBudget b;
    b.tx_power = s.power_w;
    b.noise_power = s.noise_w;
    b.rician_kappa = s.rician_kappa;
    b.wavelength = s.wavelength;
    return b;
}

channel::ChannelScenario to_channel_scenario(const ScenarioConfig& s) {
    channel::ChannelScenario cs;
    cs.alpha = s.alpha;
    cs.beta0 = s.beta0;
    cs.los_paths = s.los_paths;
    cs.nlos_paths = s.nlos_paths;
    cs.array_ref = s.box.center();
    return cs;
}

pso::SwarmConfig to_swarm_config(const RunConfig& c) {
    pso::SwarmConfig sc;
    sc.particles = c.swarm.particles;
    sc.iterations = c.swarm.iterations;
    sc.c1 = c.swarm.c1;
    sc.c2 = c.swarm.c2;
    sc.omega_max = c.swarm.omega_max;
    sc.omega_min = c.swarm.omega_min;
    sc.bounds = c.scenario.box;
    sc.antennas = c.scenario.antennas;
    sc.d_max_slot = c.scenario.d_max_slot;
    sc.d_min_ma = c.scenario.d_min_ma;
    sc.seed = c.seed;
    sc.per_coordinate_random = c.swarm.per_coordinate_random;
    sc.polish_rounds = c.swarm.polish_rounds;
    sc.threads = 1;
    return sc;
}

} // namespace mapos::cfg
