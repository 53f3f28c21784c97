// mapos CLI: drives the movable-antenna pipeline through the public C API.
//
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numeric failure,
// 5 infeasible constraints.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mapos.h"

namespace {

const char* category_name(mapos_status s) {
    switch (s) {
        case MAPOS_OK: return "ok";
        case MAPOS_ERR_CONFIG: return "config";
        case MAPOS_ERR_IO: return "io";
        case MAPOS_ERR_NUMERIC: return "numeric";
        case MAPOS_ERR_INFEASIBLE: return "infeasible";
    }
    return "unknown";
}

int finish(mapos_status s) {
    if (s != MAPOS_OK)
        std::fprintf(stderr, "error[%s]: %s\n", category_name(s), mapos_last_error());
    return static_cast<int>(s);
}

struct ConfigArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "scenario/model configuration file (INI-style sections)");
        cmd->add_option("--seed", seed, "RNG seed (dimensionless); overrides the config")
            ->each([this](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads,
                        "worker threads, 0 = all cores (never changes results)");
    }

    // builds the config handle or returns nonzero status
    mapos_status make(mapos_config** out) const {
        mapos_status st = config_path.empty() ? mapos_config_default(out)
                                              : mapos_config_load(config_path.c_str(), out);
        if (st != MAPOS_OK) return st;
        if (seed_set) mapos_config_override_seed(*out, seed);
        if (threads >= 0) mapos_config_override_threads(*out, threads);
        return MAPOS_OK;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"movable-antenna secure-link simulation, optimization, and forecasting"};
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data",
                                   "optimize antenna positions per slot and write the dataset");
    ConfigArgs gen_cfg;
    gen_cfg.attach(gen);
    std::string gen_out = "dataset.mapd";
    bool gen_verbose = false;
    gen->add_option("--out", gen_out, "output dataset file (MAPD v1)")->required();
    gen->add_flag("--verbose", gen_verbose, "print per-slot progress to stderr");

    // ---- optimize ----
    auto* opt = app.add_subcommand("optimize",
                                   "single-slot swarm run with convergence history CSV");
    ConfigArgs opt_cfg;
    opt_cfg.attach(opt);
    int opt_slot = 0;
    std::string opt_dataset, opt_out = "convergence.csv";
    opt->add_option("--slot", opt_slot, "time slot index (dimensionless)")->required();
    opt->add_option("--dataset", opt_dataset,
                    "dataset file supplying the previous slot's layout (optional)");
    opt->add_option("--out", opt_out, "output CSV (iteration,gbest_fit,mean_fit,repairs)")
        ->required();

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train the configured predictor on a dataset");
    ConfigArgs tr_cfg;
    tr_cfg.attach(tr);
    std::string tr_dataset, tr_out = "model.mapw", tr_log, tr_kind;
    bool tr_verbose = false;
    tr->add_option("--dataset", tr_dataset, "input dataset file (MAPD v1)")->required();
    tr->add_option("--out", tr_out, "output weight file (MAPW v1)")->required();
    tr->add_option("--log", tr_log, "training log CSV (epoch,train_nmse,val_nmse,wall_ms)");
    tr->add_option("--kind", tr_kind, "model kind: proposed | lstm | transformer | narx");
    tr->add_flag("--verbose", tr_verbose, "print training progress to stderr");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate trained models on the test split");
    ConfigArgs ev_cfg;
    ev_cfg.attach(ev);
    std::string ev_dataset, ev_out = "eval";
    std::vector<std::string> ev_models;
    ev->add_option("--dataset", ev_dataset, "input dataset file (MAPD v1)")->required();
    ev->add_option("--models", ev_models, "trained model files (MAPW v1)")
        ->required()
        ->expected(-1);
    ev->add_option("--out", ev_out, "output directory for metric CSV tables")->required();

    // ---- gain-pattern ----
    auto* gp = app.add_subcommand("gain-pattern",
                                  "azimuth gain sweep at one dataset slot");
    ConfigArgs gp_cfg;
    gp_cfg.attach(gp);
    std::string gp_dataset, gp_out = "gain.csv";
    int gp_slot = 0;
    gp->add_option("--dataset", gp_dataset, "dataset file with optimized layouts")
        ->required();
    gp->add_option("--slot", gp_slot, "time slot index (dimensionless)")->required();
    gp->add_option("--out", gp_out,
                   "output CSV (phi_deg,fixed_gain,optimized_gain,mrt_gain)")
        ->required();

    // ---- report ----
    auto* rp = app.add_subcommand("report", "render an evaluation directory into charts");
    std::string rp_eval, rp_out = "report";
    rp->add_option("--eval", rp_eval, "directory written by the eval subcommand")
        ->required();
    rp->add_option("--out", rp_out, "output directory for CSV + SVG + manifest")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        mapos_config* cfg = nullptr;
        mapos_status st = gen_cfg.make(&cfg);
        if (st != MAPOS_OK) return finish(st);
        st = mapos_gen_data(cfg, gen_out.c_str(), gen_verbose ? 1 : 0);
        mapos_config_free(cfg);
        return finish(st);
    }
    if (opt->parsed()) {
        mapos_config* cfg = nullptr;
        mapos_status st = opt_cfg.make(&cfg);
        if (st != MAPOS_OK) return finish(st);
        st = mapos_optimize_slot(cfg, opt_slot,
                                 opt_dataset.empty() ? nullptr : opt_dataset.c_str(),
                                 opt_out.c_str());
        mapos_config_free(cfg);
        return finish(st);
    }
    if (tr->parsed()) {
        mapos_config* cfg = nullptr;
        mapos_status st = tr_cfg.make(&cfg);
        if (st != MAPOS_OK) return finish(st);
        if (!tr_kind.empty()) {
            st = mapos_config_override_model_kind(cfg, tr_kind.c_str());
            if (st != MAPOS_OK) {
                mapos_config_free(cfg);
                return finish(st);
            }
        }
        st = mapos_train(cfg, tr_dataset.c_str(), tr_out.c_str(),
                         tr_log.empty() ? nullptr : tr_log.c_str(), tr_verbose ? 1 : 0);
        mapos_config_free(cfg);
        return finish(st);
    }
    if (ev->parsed()) {
        mapos_config* cfg = nullptr;
        mapos_status st = ev_cfg.make(&cfg);
        if (st != MAPOS_OK) return finish(st);
        std::vector<const char*> paths;
        paths.reserve(ev_models.size());
        for (const auto& p : ev_models) paths.push_back(p.c_str());
        st = mapos_eval(cfg, ev_dataset.c_str(), paths.data(), paths.size(),
                        ev_out.c_str());
        mapos_config_free(cfg);
        return finish(st);
    }
    if (gp->parsed()) {
        mapos_config* cfg = nullptr;
        mapos_status st = gp_cfg.make(&cfg);
        if (st != MAPOS_OK) return finish(st);
        st = mapos_gain_pattern(cfg, gp_dataset.c_str(), gp_slot, gp_out.c_str());
        mapos_config_free(cfg);
        return finish(st);
    }
    if (rp->parsed()) return finish(mapos_report(rp_eval.c_str(), rp_out.c_str()));

    return finish(MAPOS_ERR_CONFIG);
}
