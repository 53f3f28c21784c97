#ifndef MAPOS_CONFIG_HPP
#define MAPOS_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "geometry.hpp"
#include "pso.hpp"

namespace mapos::cfg {

enum class TrajectoryKind { WaypointLinear, ParametricSinusoid, RandomWalk };

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::WaypointLinear;
    Vec3 start{0, 0, 10};
    Vec3 end{0, 0, 10};
    Vec3 amplitude{0, 0, 0};   // sinusoid only
    double period_slots = 120; // sinusoid only
    Vec3 phases{0, 0, 0};      // sinusoid only, radians per axis
    double step_std = 0.5;     // random walk only, meters per axis
    int slots = 0;             // filled from the trajectories section
    double dt = 0.1;           // seconds per slot, metadata only
};

struct ScenarioConfig {
    std::size_t antennas = 9;
    double frequency_ghz = 28.0;
    double wavelength = 0.0;   // derived (c/F) unless overridden
    double beta0 = 1e-3;
    double alpha = 2.8;
    double rician_kappa = 10.0;
    int los_paths = 1;
    int nlos_paths = 4;
    double noise_w = 1e-5;
    double power_w = 1.0;
    double bs_height = 20.0;
    Box box;                   // movement region, absolute coordinates
    double d_max_slot = 0.0;   // meters
    double d_min_ma = 0.0;     // meters
    int mc_samples = 16;       // Monte Carlo draws per fitness evaluation
};

struct SwarmSettings {
    int particles = 50;
    int iterations = 60;
    double c1 = 1.49445;
    double c2 = 1.49445;
    double omega_max = 0.9;
    double omega_min = 0.4;
    bool per_coordinate_random = false;
    int polish_rounds = 2;
};

struct TrajectoriesConfig {
    int slots = 600; // T_hist
    double dt = 0.1;
    bool synthetic_layouts = false; // sinusoidal layout motion instead of PSO
    TrajectorySpec bob;
    TrajectorySpec eve;
};

enum class ModelKind { Proposed, LstmOnly, TransformerOnly, Narx };

std::string model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
    ModelKind kind = ModelKind::Proposed;
    int t_hist_win = 20;
    int t_pre = 60;
    int lstm_hidden = 8;      // per-antenna encoder width
    int d_model = 32;
    int heads = 4;
    double dropout = 0.1;
    int bilstm_hidden = 16;
    bool attention_over_antennas = false; // tokens = antennas instead of time steps
    double learning_rate = 0.001;
    int epochs = 60;
    int batch = 32;
    int train_stride = 2;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    int narx_delay = 5;
    int narx_hidden = 32;
    int lstm_only_hidden = 48;
    int lstm_only_layers = 2;
    int transformer_blocks = 2;
    int transformer_ff = 64;
};

struct EvalConfig {
    double accuracy_eps = 0.0005; // meters
    std::vector<int> horizons{10, 20, 30, 40, 50, 60};
    std::vector<double> alpha_grid{2.0, 2.5, 3.0, 3.5, 4.0};
    std::vector<double> noise_grid{1e-6, 3e-6, 1e-5, 3e-5, 1e-4};
    std::vector<double> power_grid{0.2, 0.4, 0.6, 0.8, 1.0};
    int replay_slots = 20;
    int replay_nlos = 0; // NLoS path count during replay (0 = pure LoS)
    int timing_runs = 30;
};

struct RunConfig {
    ScenarioConfig scenario;
    SwarmSettings swarm;
    TrajectoriesConfig trajectories;
    ModelConfig model;
    EvalConfig eval;
    std::uint64_t seed = 20240801;
    int threads = 0; // 0 = auto; never changes numeric results
};

// Table II defaults with all derived quantities resolved.
RunConfig default_config();

// Parse `key = value` sections; errors cite line numbers and keys, unknown
// keys name the nearest valid key.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_config_file(const std::string& path);

// Canonical flattened view (section.key, value) of every setting, used for
// dataset metadata snapshots; parsing the snapshot back reproduces the config.
std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& c);
RunConfig config_from_snapshot(const std::vector<std::pair<std::string, std::string>>& kv);

channel::LinkBudget to_budget(const ScenarioConfig& s);
channel::ChannelScenario to_channel_scenario(const ScenarioConfig& s);
pso::SwarmConfig to_swarm_config(const RunConfig& c);

} // namespace mapos::cfg

#endif
