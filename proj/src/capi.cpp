#include "mapos.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "models.hpp"
#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

mapos_status to_status(const mapos::Error& e) {
    switch (e.category()) {
        case mapos::ErrorCategory::Config: return MAPOS_ERR_CONFIG;
        case mapos::ErrorCategory::Io: return MAPOS_ERR_IO;
        case mapos::ErrorCategory::Numeric: return MAPOS_ERR_NUMERIC;
        case mapos::ErrorCategory::Infeasible: return MAPOS_ERR_INFEASIBLE;
    }
    return MAPOS_ERR_NUMERIC;
}

template <typename Fn>
mapos_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return MAPOS_OK;
    } catch (const mapos::Error& e) {
        g_last_error = e.what();
        return to_status(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MAPOS_ERR_NUMERIC;
    }
}

mapos_status invalid_arg(const char* what) {
    g_last_error = what;
    return MAPOS_ERR_CONFIG;
}

} // namespace

struct mapos_config {
    mapos::cfg::RunConfig rc;
};

struct mapos_dataset {
    mapos::data::Dataset ds;
};

struct mapos_model {
    mapos::model::LoadedModel lm;
};

extern "C" {

const char* mapos_last_error(void) { return g_last_error.c_str(); }

mapos_status mapos_config_default(mapos_config** out) {
    if (!out) return invalid_arg("null output pointer");
    return guarded([&] { *out = new mapos_config{mapos::cfg::default_config()}; });
}

mapos_status mapos_config_load(const char* path, mapos_config** out) {
    if (!path || !out) return invalid_arg("null path or output pointer");
    return guarded([&] { *out = new mapos_config{mapos::cfg::parse_config_file(path)}; });
}

mapos_status mapos_config_parse(const char* text, mapos_config** out) {
    if (!text || !out) return invalid_arg("null text or output pointer");
    return guarded(
        [&] { *out = new mapos_config{mapos::cfg::parse_config_text(text, "<string>")}; });
}

mapos_status mapos_config_override_seed(mapos_config* cfg, uint64_t seed) {
    if (!cfg) return invalid_arg("null config");
    cfg->rc.seed = seed;
    return MAPOS_OK;
}

mapos_status mapos_config_override_threads(mapos_config* cfg, int threads) {
    if (!cfg) return invalid_arg("null config");
    if (threads < 0) return invalid_arg("threads must be >= 0");
    cfg->rc.threads = threads;
    return MAPOS_OK;
}

mapos_status mapos_config_override_model_kind(mapos_config* cfg, const char* kind) {
    if (!cfg || !kind) return invalid_arg("null config or kind");
    return guarded([&] { cfg->rc.model.kind = mapos::cfg::parse_model_kind(kind); });
}

void mapos_config_free(mapos_config* cfg) { delete cfg; }

mapos_status mapos_gen_data(const mapos_config* cfg, const char* out_path, int verbose) {
    if (!cfg || !out_path) return invalid_arg("null config or output path");
    return guarded([&] { mapos::pipeline::cmd_gen_data(cfg->rc, out_path, verbose != 0); });
}

mapos_status mapos_optimize_slot(const mapos_config* cfg, int slot,
                                 const char* dataset_path, const char* out_csv) {
    if (!cfg || !out_csv) return invalid_arg("null config or output path");
    return guarded([&] {
        mapos::pipeline::cmd_optimize(cfg->rc, slot, dataset_path ? dataset_path : "",
                                      out_csv);
    });
}

mapos_status mapos_train(const mapos_config* cfg, const char* dataset_path,
                         const char* model_out, const char* log_csv, int verbose) {
    if (!cfg || !dataset_path || !model_out)
        return invalid_arg("null config, dataset path, or model path");
    return guarded([&] {
        mapos::pipeline::cmd_train(cfg->rc, dataset_path, model_out,
                                   log_csv ? log_csv : "", verbose != 0);
    });
}

mapos_status mapos_eval(const mapos_config* cfg, const char* dataset_path,
                        const char* const* model_paths, size_t n_models,
                        const char* out_dir) {
    if (!cfg || !dataset_path || !model_paths || !out_dir)
        return invalid_arg("null argument to eval");
    return guarded([&] {
        std::vector<std::string> paths;
        for (size_t i = 0; i < n_models; ++i) {
            if (!model_paths[i]) throw mapos::config_error("null model path in list");
            paths.emplace_back(model_paths[i]);
        }
        mapos::pipeline::cmd_eval(cfg->rc, dataset_path, paths, out_dir);
    });
}

mapos_status mapos_gain_pattern(const mapos_config* cfg, const char* dataset_path,
                                int slot, const char* out_csv) {
    if (!cfg || !dataset_path || !out_csv) return invalid_arg("null argument");
    return guarded(
        [&] { mapos::pipeline::cmd_gain_pattern(cfg->rc, dataset_path, slot, out_csv); });
}

mapos_status mapos_report(const char* eval_dir, const char* out_dir) {
    if (!eval_dir || !out_dir) return invalid_arg("null directory");
    return guarded([&] { mapos::pipeline::cmd_report(eval_dir, out_dir); });
}

mapos_status mapos_dataset_load(const char* path, mapos_dataset** out) {
    if (!path || !out) return invalid_arg("null path or output pointer");
    return guarded([&] { *out = new mapos_dataset{mapos::data::load_dataset(path)}; });
}

void mapos_dataset_free(mapos_dataset* ds) { delete ds; }

mapos_status mapos_dataset_slots(const mapos_dataset* ds, int* out) {
    if (!ds || !out) return invalid_arg("null dataset or output");
    *out = ds->ds.slots();
    return MAPOS_OK;
}

mapos_status mapos_dataset_antennas(const mapos_dataset* ds, size_t* out) {
    if (!ds || !out) return invalid_arg("null dataset or output");
    *out = ds->ds.antennas();
    return MAPOS_OK;
}

mapos_status mapos_dataset_secrecy(const mapos_dataset* ds, int slot, double* out) {
    if (!ds || !out) return invalid_arg("null dataset or output");
    if (slot < 0 || slot >= ds->ds.slots()) return invalid_arg("slot out of range");
    *out = ds->ds.records[static_cast<size_t>(slot)].secrecy;
    return MAPOS_OK;
}

mapos_status mapos_dataset_layout(const mapos_dataset* ds, int slot, double* xyz,
                                  size_t len) {
    if (!ds || !xyz) return invalid_arg("null dataset or output");
    if (slot < 0 || slot >= ds->ds.slots()) return invalid_arg("slot out of range");
    const auto& layout = ds->ds.records[static_cast<size_t>(slot)].layout;
    if (len != 3 * layout.size()) return invalid_arg("layout buffer has the wrong size");
    for (size_t m = 0; m < layout.size(); ++m) {
        xyz[3 * m] = layout.positions[m].x;
        xyz[3 * m + 1] = layout.positions[m].y;
        xyz[3 * m + 2] = layout.positions[m].z;
    }
    return MAPOS_OK;
}

mapos_status mapos_model_load(const char* path, mapos_model** out) {
    if (!path || !out) return invalid_arg("null path or output pointer");
    return guarded([&] { *out = new mapos_model{mapos::model::load_model(path)}; });
}

void mapos_model_free(mapos_model* m) { delete m; }

mapos_status mapos_model_kind(const mapos_model* m, char* buf, size_t buf_len) {
    if (!m || !buf || buf_len == 0) return invalid_arg("null model or buffer");
    std::string name = mapos::cfg::model_kind_name(m->lm.model->kind());
    if (name.size() + 1 > buf_len) return invalid_arg("kind buffer too small");
    std::memcpy(buf, name.c_str(), name.size() + 1);
    return MAPOS_OK;
}

mapos_status mapos_model_geometry(const mapos_model* m, int* t_hist, int* t_pre,
                                  size_t* antennas) {
    if (!m) return invalid_arg("null model");
    if (t_hist) *t_hist = m->lm.model->config().t_hist_win;
    if (t_pre) *t_pre = m->lm.model->config().t_pre;
    if (antennas) *antennas = m->lm.model->antennas();
    return MAPOS_OK;
}

mapos_status mapos_model_predict(const mapos_model* m, const double* history,
                                 size_t history_len, double* out, size_t out_len) {
    if (!m || !history || !out) return invalid_arg("null model or buffer");
    const size_t in3 = m->lm.model->antennas() * 3;
    const size_t need_in = static_cast<size_t>(m->lm.model->config().t_hist_win) * in3;
    const size_t need_out = static_cast<size_t>(m->lm.model->config().t_pre) * in3;
    if (history_len != need_in) return invalid_arg("history buffer has the wrong size");
    if (out_len != need_out) return invalid_arg("output buffer has the wrong size");
    return guarded([&] {
        // meters in, meters out: normalize with the model's stored statistics
        std::vector<double> hist(history, history + history_len);
        const auto& norm = m->lm.norm;
        const double lo[3] = {norm.lo.x, norm.lo.y, norm.lo.z};
        const double span[3] = {norm.span.x, norm.span.y, norm.span.z};
        for (size_t i = 0; i < hist.size(); ++i) hist[i] = (hist[i] - lo[i % 3]) / span[i % 3];
        mapos::model::Prediction p = mapos::model::predict(*m->lm.model, norm, hist);
        std::memcpy(out, p.coords.data(), p.coords.size() * sizeof(double));
    });
}

} // extern "C"
