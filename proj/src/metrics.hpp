#ifndef MAPOS_METRICS_HPP
#define MAPOS_METRICS_HPP

#include <vector>

#include "models.hpp"
#include "tensor.hpp"

// Prediction-quality metrics: NMSE, thresholded accuracy, error-distribution
// box statistics, and inference timing.
namespace mapos::eval {

// sum_t ||pred_t - truth_t||_F^2 / sum_t ||truth_t||_F^2 over equal-length
// flat blocks. Scale-covariant; rejects zero-norm truth.
double nmse(const std::vector<double>& pred, const std::vector<double>& truth);

// Fraction of (slot, antenna) pairs whose Euclidean position error is within
// eps meters. Blocks are [T][M][3] row-major.
double accuracy_at_threshold(const std::vector<double>& pred,
                             const std::vector<double>& truth, double eps);

struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
};

// Median and quartiles by linear interpolation; whiskers at the most extreme
// samples within 1.5 IQR of the quartiles. Needs at least 4 samples.
BoxStats mse_stats(std::vector<double> samples);

struct TimingStats {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    int runs = 0;
};

// Wall-clock statistics of eval-mode prediction; at least 3 warmup runs are
// discarded. Requires reps >= 10.
TimingStats time_inference(const model::Predictor& model, const nn::Tensor& history,
                           int reps);

} // namespace mapos::eval

#endif
