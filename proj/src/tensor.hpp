#ifndef MAPOS_TENSOR_HPP
#define MAPOS_TENSOR_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "rng.hpp"

namespace mapos::nn {

// Dense row-major numeric array. Rank is dynamic but almost everything in the
// predictor stack is 1-D or 2-D.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool finite() const;
    std::string shape_str() const;
};

// y = x * w, x:[n,in] w:[in,out] -> [n,out]
Tensor matmul(const Tensor& x, const Tensor& w);
// y = x^T * w, x:[n,in] w:[n,out] -> [in,out]   (gradient of weights)
Tensor matmul_tn(const Tensor& x, const Tensor& w);
// y = x * w^T, x:[n,out] w:[in,out] -> [n,in]   (gradient of inputs)
Tensor matmul_nt(const Tensor& x, const Tensor& w);

void check_same_shape(const Tensor& a, const Tensor& b, const char* where);

// Named trainable parameters with gradient and Adam moment buffers.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor m;  // first moment
        Tensor v;  // second moment
    };

    Tensor& add(const std::string& name, std::vector<std::size_t> shape);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;
    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }
    Tensor& grad(const std::string& name) { return entry(name).grad; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zero_grad();
    std::size_t parameter_count() const;

    long long step_count() const { return step_; }
    void set_step_count(long long s) { step_ = s; }

    // copy of all values (for best-validation snapshots)
    std::vector<Tensor> snapshot_values() const;
    void restore_values(const std::vector<Tensor>& values);

private:
    friend void adam_step(ParamStore&, double, double, double, double);
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    long long step_ = 0;
};

// Bias-corrected Adam update over every parameter; increments the step count.
void adam_step(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Xavier-uniform for feedforward weights.
void init_xavier(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);
// Scaled uniform for recurrent weights.
void init_recurrent(Tensor& w, std::size_t hidden, Rng& rng);

} // namespace mapos::nn

#endif
