#ifndef MAPOS_MODELS_HPP
#define MAPOS_MODELS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "layers.hpp"
#include "tensor.hpp"

// The position predictors: the hybrid LSTM/self-attention/BiLSTM network and
// the NARX / LSTM-only / Transformer-only baselines. All consume a normalized
// [t_hist, M*3] history block and emit the full [t_pre, M*3] future block.
namespace mapos::model {

using cfg::ModelConfig;
using cfg::ModelKind;

// Forward activations recorded for the backward pass. Which members are used
// depends on the model kind.
struct ForwardCaches {
    // hybrid predictor
    std::vector<nn::LstmSeqCache> ant_lstm;
    nn::DenseCache fuse;
    nn::MhaCache mha;                    // attention over time steps
    std::vector<nn::MhaCache> mha_steps; // attention over antennas, one per step
    nn::DenseCache token, fold;          // antenna-axis projections
    nn::DropoutCache drop;
    nn::BilstmCache bilstm;
    nn::DenseCache head;
    // stacked LSTM baseline
    std::vector<nn::LstmSeqCache> stack;
    // transformer baseline
    nn::DenseCache embed;
    std::vector<nn::MhaCache> block_mha;
    std::vector<nn::DenseCache> block_ff1, block_ff2;
    std::vector<nn::Tensor> block_ff_act;
    // NARX rollout
    std::vector<nn::DenseCache> narx_l1, narx_l2;
    std::vector<nn::Tensor> narx_act;
};

class Predictor {
public:
    // Freshly initialized weights (deterministic given init_seed).
    Predictor(ModelKind kind, const ModelConfig& cfg, std::size_t antennas,
              std::uint64_t init_seed);

    ModelKind kind() const { return kind_; }
    const ModelConfig& config() const { return cfg_; }
    std::size_t antennas() const { return antennas_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }

    // Closed-form parameter count implied by the configuration; always equals
    // store().parameter_count().
    std::size_t expected_parameter_count() const;

    // history [t_hist, M*3] normalized -> [t_pre, M*3] normalized.
    // Training mode applies dropout using drop_rng and may record caches.
    nn::Tensor forward(const nn::Tensor& history, bool train, Rng* drop_rng,
                       ForwardCaches* caches) const;

    // Eval-mode forward without caches; pure and reentrant.
    nn::Tensor predict_normalized(const nn::Tensor& history) const;

    // Accumulates parameter gradients from dy [t_pre, M*3]; returns dHistory.
    nn::Tensor backward(const nn::Tensor& dy, const ForwardCaches& caches);

    // NARX training mode (series-parallel): every step's delay line is filled
    // from the true sequence instead of the rollout, the classic way NARX
    // networks are fit; inference still rolls out autoregressively.
    nn::Tensor forward_teacher(const nn::Tensor& history, const nn::Tensor& targets,
                               ForwardCaches* caches) const;
    void backward_teacher(const nn::Tensor& dy, const ForwardCaches& caches);

private:
    ModelKind kind_;
    ModelConfig cfg_;
    std::size_t antennas_;
    nn::ParamStore store_;

    void build_params(std::uint64_t init_seed);
};

// ---------- training ----------

struct EpochLog {
    int epoch = 0;
    double train_nmse = 0.0;
    double val_nmse = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> curve;
    double best_val_nmse = 0.0;
    int best_epoch = 0;
};

// Supervised training on the window set's train split, minimizing batch NMSE
// with Adam; retains the best-validation weights. Deterministic given seed.
TrainResult train(Predictor& model, const data::WindowSet& ws, std::uint64_t seed);

// ---------- prediction with feasibility snap ----------

// Normalization statistics and feasible region a prediction must respect;
// persisted with the model so a loaded file is self-contained.
struct SavedNormalization {
    Vec3 lo;
    Vec3 span;
    Box clamp_box;
};

SavedNormalization norm_from_windows(const data::WindowSet& ws);

struct Prediction {
    std::vector<double> coords; // denormalized [t_pre][M][3] row-major
    int clamped = 0;            // coordinates snapped to the feasible box
};

// Forward in eval mode on normalized history, inverse-normalized and clamped
// to the feasible box.
Prediction predict(const Predictor& model, const SavedNormalization& norm,
                   const std::vector<double>& history_normalized);

// ---------- persistence ----------

// Weight file: text manifest (format version, kind, geometry, config snapshot,
// normalization + box) followed by raw little-endian float64 values in
// manifest order. Round-trips bit-exactly.
void save_model(const Predictor& model, const SavedNormalization& norm,
                const std::string& path);

struct LoadedModel {
    std::unique_ptr<Predictor> model;
    SavedNormalization norm;
};

LoadedModel load_model(const std::string& path);

} // namespace mapos::model

#endif
