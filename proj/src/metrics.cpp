#include "metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "error.hpp"

namespace mapos::eval {

double nmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size())
        throw numeric_error("nmse: blocks differ in size: " + std::to_string(pred.size()) +
                            " vs " + std::to_string(truth.size()));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (den <= 0.0) throw numeric_error("nmse: truth block has zero norm");
    return num / den;
}

double accuracy_at_threshold(const std::vector<double>& pred,
                             const std::vector<double>& truth, double eps) {
    if (eps <= 0.0) throw numeric_error("accuracy threshold must be positive");
    if (pred.size() != truth.size() || pred.size() % 3 != 0)
        throw numeric_error("accuracy: blocks must be equal-length coordinate triples");
    const std::size_t n = pred.size() / 3;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = pred[3 * i] - truth[3 * i];
        const double dy = pred[3 * i + 1] - truth[3 * i + 1];
        const double dz = pred[3 * i + 2] - truth[3 * i + 2];
        if (std::sqrt(dx * dx + dy * dy + dz * dz) <= eps) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

// linear-interpolation quantile on sorted data
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

BoxStats mse_stats(std::vector<double> samples) {
    if (samples.size() < 4)
        throw numeric_error("box statistics need at least 4 samples, got " +
                            std::to_string(samples.size()));
    std::sort(samples.begin(), samples.end());
    BoxStats s;
    s.q1 = quantile(samples, 0.25);
    s.median = quantile(samples, 0.5);
    s.q3 = quantile(samples, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_lo = samples.back();
    s.whisker_hi = samples.front();
    for (double v : samples) {
        if (v >= lo_fence && v < s.whisker_lo) s.whisker_lo = v;
        if (v <= hi_fence && v > s.whisker_hi) s.whisker_hi = v;
    }
    return s;
}

TimingStats time_inference(const model::Predictor& model, const nn::Tensor& history,
                           int reps) {
    if (reps < 10) throw numeric_error("timing needs at least 10 repetitions");
    for (int i = 0; i < 3; ++i) model.predict_normalized(history);

    std::vector<double> ms(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        model.predict_normalized(history);
        const auto t1 = std::chrono::steady_clock::now();
        ms[static_cast<std::size_t>(i)] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    TimingStats st;
    st.runs = reps;
    for (double v : ms) st.mean_ms += v;
    st.mean_ms /= static_cast<double>(reps);
    double acc = 0.0;
    for (double v : ms) acc += (v - st.mean_ms) * (v - st.mean_ms);
    st.std_ms = std::sqrt(acc / static_cast<double>(reps));
    return st;
}

} // namespace mapos::eval
