#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace mapos::nn {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    data.assign(n, 0.0);
}

bool Tensor::finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "x" : "") + std::to_string(shape[i]);
    return s + "]";
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (a.shape != b.shape)
        throw numeric_error(std::string(where) + ": shape mismatch " + a.shape_str() +
                            " vs " + b.shape_str());
}

Tensor matmul(const Tensor& x, const Tensor& w) {
    if (x.cols() != w.rows())
        throw numeric_error("matmul: inner dimensions disagree " + x.shape_str() + " vs " +
                            w.shape_str());
    const std::size_t n = x.rows(), in = x.cols(), out = w.cols();
    Tensor y({n, out});
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = &x.data[i * in];
        double* yi = &y.data[i * out];
        for (std::size_t k = 0; k < in; ++k) {
            const double xv = xi[k];
            if (xv == 0.0) continue;
            const double* wk = &w.data[k * out];
            for (std::size_t j = 0; j < out; ++j) yi[j] += xv * wk[j];
        }
    }
    return y;
}

Tensor matmul_tn(const Tensor& x, const Tensor& w) {
    if (x.rows() != w.rows())
        throw numeric_error("matmul_tn: leading dimensions disagree " + x.shape_str() +
                            " vs " + w.shape_str());
    const std::size_t n = x.rows(), in = x.cols(), out = w.cols();
    Tensor y({in, out});
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = &x.data[r * in];
        const double* wr = &w.data[r * out];
        for (std::size_t i = 0; i < in; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            double* yi = &y.data[i * out];
            for (std::size_t j = 0; j < out; ++j) yi[j] += xv * wr[j];
        }
    }
    return y;
}

Tensor matmul_nt(const Tensor& x, const Tensor& w) {
    if (x.cols() != w.cols())
        throw numeric_error("matmul_nt: trailing dimensions disagree " + x.shape_str() +
                            " vs " + w.shape_str());
    const std::size_t n = x.rows(), out = x.cols(), in = w.rows();
    Tensor y({n, in});
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = &x.data[i * out];
        double* yi = &y.data[i * in];
        for (std::size_t k = 0; k < in; ++k) {
            const double* wk = &w.data[k * out];
            double acc = 0.0;
            for (std::size_t j = 0; j < out; ++j) acc += xi[j] * wk[j];
            yi[k] = acc;
        }
    }
    return y;
}

Tensor& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name)) throw numeric_error("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    Entry e;
    e.name = name;
    e.value = Tensor(shape);
    e.grad = Tensor(shape);
    e.m = Tensor(shape);
    e.v = Tensor(std::move(shape));
    entries_.push_back(std::move(e));
    return entries_.back().value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw numeric_error("unknown parameter: " + name);
    return entries_[it->second];
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw numeric_error("unknown parameter: " + name);
    return entries_[it->second];
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

std::vector<Tensor> ParamStore::snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.value);
    return out;
}

void ParamStore::restore_values(const std::vector<Tensor>& values) {
    if (values.size() != entries_.size())
        throw numeric_error("parameter snapshot does not match the store layout");
    for (std::size_t i = 0; i < values.size(); ++i) {
        check_same_shape(values[i], entries_[i].value, "restore_values");
        entries_[i].value = values[i];
    }
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps) {
    store.step_ += 1;
    const double t = static_cast<double>(store.step_);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (auto& e : store.entries_) {
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double g = e.grad.data[i];
            e.m.data[i] = beta1 * e.m.data[i] + (1.0 - beta1) * g;
            e.v.data[i] = beta2 * e.v.data[i] + (1.0 - beta2) * g * g;
            const double mhat = e.m.data[i] / bc1;
            const double vhat = e.v.data[i] / bc2;
            e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void init_xavier(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

void init_recurrent(Tensor& w, std::size_t hidden, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

} // namespace mapos::nn
