#ifndef MAPOS_LAYERS_HPP
#define MAPOS_LAYERS_HPP

#include <functional>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

// Forward/backward building blocks for the predictor stack. Each forward
// optionally records a cache; the matching backward consumes it, returns the
// input gradient, and accumulates parameter gradients.
namespace mapos::nn {

// ---------- fully connected ----------

struct DenseCache {
    Tensor x;
};

// y = x w + b, x:[n,in] -> [n,out]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                     DenseCache* cache = nullptr);
Tensor dense_backward(const Tensor& dy, const DenseCache& cache, const Tensor& w,
                      Tensor& dw, Tensor& db);

// ---------- LSTM ----------

struct LstmWeights {
    const Tensor* wx; // [in, 4h], gate order i f g o
    const Tensor* wh; // [h, 4h]
    const Tensor* b;  // [4h]
};

struct LstmGrads {
    Tensor* wx;
    Tensor* wh;
    Tensor* b;
};

struct LstmStepCache {
    Tensor x, h_prev, c_prev; // inputs
    Tensor i, f, g, o;        // gate activations
    Tensor c, tanh_c;         // new cell state and its tanh
};

// Single gated step: c' = f.c + i.g, h' = o.tanh(c').
void lstm_cell_forward(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                       const LstmWeights& w, Tensor& h_out, Tensor& c_out,
                       LstmStepCache* cache = nullptr);
// dh/dc are gradients flowing into h_out/c_out; returns via out-params the
// gradients for x, h_prev, c_prev and accumulates weight gradients.
void lstm_cell_backward(const Tensor& dh, const Tensor& dc, const LstmStepCache& cache,
                        const LstmWeights& w, const LstmGrads& g, Tensor& dx,
                        Tensor& dh_prev, Tensor& dc_prev);

struct LstmSeqCache {
    std::vector<LstmStepCache> steps;
    bool reversed = false;
    std::size_t in = 0, hid = 0;
};

enum class Direction { Forward, Backward };

// Unrolled cell over xs:[T,in] -> hs:[T,hid] from zero initial state.
// Direction::Backward processes the time-reversed input and re-reverses the
// output, so it equals reverse(forward(reverse(xs))) exactly.
Tensor lstm_sequence_forward(const Tensor& xs, const LstmWeights& w, std::size_t hid,
                             Direction dir, LstmSeqCache* cache = nullptr);
// dhs:[T,hid] -> dxs:[T,in]
Tensor lstm_sequence_backward(const Tensor& dhs, const LstmSeqCache& cache,
                              const LstmWeights& w, const LstmGrads& g);

struct BilstmCache {
    LstmSeqCache fwd, bwd;
};

// Concatenated forward and backward passes: [T, 2h].
Tensor bilstm_forward(const Tensor& xs, const LstmWeights& wf, const LstmWeights& wb,
                      std::size_t hid, BilstmCache* cache = nullptr);
Tensor bilstm_backward(const Tensor& dys, const BilstmCache& cache, const LstmWeights& wf,
                       const LstmWeights& wb, const LstmGrads& gf, const LstmGrads& gb);

// ---------- attention ----------

// Row-wise, max-subtracted; each output row sums to 1.
void softmax_rows(Tensor& s);

struct MhaCache {
    Tensor x, q, k, v;         // [T,d] projections
    Tensor concat;             // [T,d] pre-output-projection
    std::vector<Tensor> attn;  // per-head attention matrices [T,T]
};

// Multi-head scaled dot-product self-attention over the rows of x:[T,d].
// Weights wq/wk/wv/wo are [d,d]; head h owns the h-th column block.
Tensor mha_forward(const Tensor& x, const Tensor& wq, const Tensor& wk, const Tensor& wv,
                   const Tensor& wo, int heads, MhaCache* cache = nullptr);
Tensor mha_backward(const Tensor& dy, const MhaCache& cache, const Tensor& wq,
                    const Tensor& wk, const Tensor& wv, const Tensor& wo, int heads,
                    Tensor& dwq, Tensor& dwk, Tensor& dwv, Tensor& dwo);

// ---------- dropout ----------

struct DropoutCache {
    std::vector<double> scale; // 0 or 1/(1-rate) per element
};

// Inverted dropout: train mode zeroes with probability `rate` and rescales
// survivors; eval mode is the identity.
Tensor dropout_forward(const Tensor& x, double rate, bool train, Rng& rng,
                       DropoutCache* cache = nullptr);
Tensor dropout_backward(const Tensor& dy, const DropoutCache& cache);

// ---------- verification ----------

// Central finite differences against analytic gradients for every parameter
// and every input element. `loss(true)` must run forward+backward (filling
// store grads and `input_grads`); `loss(false)` must be a pure forward pass.
// Returns the max relative error |a-n| / max(|a|,|n|,1e-8).
double gradient_check(const std::function<double(bool)>& loss, ParamStore& store,
                      std::vector<double>* inputs, std::vector<double>* input_grads,
                      double step = 1e-5);

} // namespace mapos::nn

#endif
