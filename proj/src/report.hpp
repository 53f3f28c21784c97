#ifndef MAPOS_REPORT_HPP
#define MAPOS_REPORT_HPP

#include <string>
#include <vector>

#include "metrics.hpp"
#include "replay.hpp"

// Evaluation artifacts: CSV metric tables and the chart/manifest bundle that
// replaces interactive figures.
namespace mapos::report {

struct ModelMetrics {
    std::string name;
    std::vector<int> horizons;
    std::vector<double> nmse_at_horizon;
    std::vector<double> accuracy_at_horizon;
    eval::BoxStats mse_box;    // per-window mean squared error, m^2
    eval::TimingStats timing;
    double clamped_fraction = 0.0; // coordinates snapped into the box
};

struct EvalOutputs {
    std::vector<ModelMetrics> models;
    std::vector<eval::ReplayRow> replay;
};

// Metric tables written by an evaluation run. Deterministic byte-for-byte
// except timing.csv, which records wall-clock measurements.
void write_eval_csvs(const EvalOutputs& out, const std::string& dir);

EvalOutputs read_eval_csvs(const std::string& dir);

// Re-emits the CSV tables plus standalone SVG line/box charts, and a manifest
// enumerating every emitted file with its schema.
void emit_report(const EvalOutputs& out, const std::string& dir);

} // namespace mapos::report

#endif
