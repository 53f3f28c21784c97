#ifndef MAPOS_PIPELINE_HPP
#define MAPOS_PIPELINE_HPP

#include <string>
#include <vector>

#include "config.hpp"

// High-level commands behind the CLI and the C API: dataset generation,
// single-slot optimization, training, evaluation, gain patterns, reporting.
namespace mapos::pipeline {

int resolve_threads(int configured);

struct GenDataSummary {
    int slots = 0;
    double mean_secrecy = 0.0;
};

// Builds the optimal-position dataset for the configured scenario and writes
// it to out_path.
GenDataSummary cmd_gen_data(const cfg::RunConfig& rc, const std::string& out_path,
                            bool verbose = false);

// Re-runs the optimizer for one time slot and writes its convergence history
// as CSV (iteration, gbest_fit, mean_fit, repairs). When dataset_path is
// nonempty the previous slot's layout is taken from that file; otherwise the
// slot chain is re-simulated from slot 0.
void cmd_optimize(const cfg::RunConfig& rc, int slot, const std::string& dataset_path,
                  const std::string& out_csv);

struct TrainSummary {
    double best_val_nmse = 0.0;
    int best_epoch = 0;
    std::size_t parameters = 0;
};

// Trains the configured model kind on a dataset; writes the weight file and a
// training log CSV (epoch, train_nmse, val_nmse, wall_ms).
TrainSummary cmd_train(const cfg::RunConfig& rc, const std::string& dataset_path,
                       const std::string& model_out, const std::string& log_csv,
                       bool verbose = false);

// Evaluates trained models on the dataset's test split across the configured
// horizon list and writes the metric CSV tables into out_dir.
void cmd_eval(const cfg::RunConfig& rc, const std::string& dataset_path,
              const std::vector<std::string>& model_paths, const std::string& out_dir);

// Azimuth sweep of the array pattern gain for the fixed grid, the optimized
// layout, and the optimized layout with MRT weights, at one dataset slot.
void cmd_gain_pattern(const cfg::RunConfig& rc, const std::string& dataset_path, int slot,
                      const std::string& out_csv);

// Renders an evaluation directory into the chart + manifest bundle.
void cmd_report(const std::string& eval_dir, const std::string& out_dir);

} // namespace mapos::pipeline

#endif
