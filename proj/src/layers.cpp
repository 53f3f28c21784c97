#include "layers.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace mapos::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor reverse_rows(const Tensor& x) {
    Tensor y({x.rows(), x.cols()});
    const std::size_t n = x.rows(), c = x.cols();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) y(n - 1 - i, j) = x(i, j);
    return y;
}

} // namespace

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, DenseCache* cache) {
    if (x.cols() != w.rows() || w.cols() != b.size())
        throw numeric_error("dense: shape mismatch x" + x.shape_str() + " w" +
                            w.shape_str() + " b" + b.shape_str());
    Tensor y = matmul(x, w);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b[j];
    if (cache) cache->x = x;
    return y;
}

Tensor dense_backward(const Tensor& dy, const DenseCache& cache, const Tensor& w,
                      Tensor& dw, Tensor& db) {
    Tensor dwi = matmul_tn(cache.x, dy);
    for (std::size_t i = 0; i < dw.size(); ++i) dw.data[i] += dwi.data[i];
    for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < dy.cols(); ++j) db[j] += dy(i, j);
    return matmul_nt(dy, w);
}

void lstm_cell_forward(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                       const LstmWeights& w, Tensor& h_out, Tensor& c_out,
                       LstmStepCache* cache) {
    const std::size_t in = x.size(), hid = h_prev.size();
    if (w.wx->rows() != in || w.wx->cols() != 4 * hid || w.wh->rows() != hid ||
        w.wh->cols() != 4 * hid || w.b->size() != 4 * hid)
        throw numeric_error("lstm cell: weight shapes do not match x" + x.shape_str() +
                            " h" + h_prev.shape_str());

    // pre-activations for the four gate blocks: i f g o
    std::vector<double> pre(4 * hid);
    for (std::size_t j = 0; j < 4 * hid; ++j) pre[j] = w.b->data[j];
    for (std::size_t k = 0; k < in; ++k) {
        const double xv = x[k];
        if (xv == 0.0) continue;
        const double* row = &w.wx->data[k * 4 * hid];
        for (std::size_t j = 0; j < 4 * hid; ++j) pre[j] += xv * row[j];
    }
    for (std::size_t k = 0; k < hid; ++k) {
        const double hv = h_prev[k];
        if (hv == 0.0) continue;
        const double* row = &w.wh->data[k * 4 * hid];
        for (std::size_t j = 0; j < 4 * hid; ++j) pre[j] += hv * row[j];
    }

    Tensor ig({hid}), fg({hid}), gg({hid}), og({hid});
    for (std::size_t j = 0; j < hid; ++j) {
        ig[j] = sigmoid(pre[j]);
        fg[j] = sigmoid(pre[hid + j]);
        gg[j] = std::tanh(pre[2 * hid + j]);
        og[j] = sigmoid(pre[3 * hid + j]);
    }

    c_out = Tensor({hid});
    h_out = Tensor({hid});
    Tensor tanh_c({hid});
    for (std::size_t j = 0; j < hid; ++j) {
        c_out[j] = fg[j] * c_prev[j] + ig[j] * gg[j];
        tanh_c[j] = std::tanh(c_out[j]);
        h_out[j] = og[j] * tanh_c[j];
    }

    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->c_prev = c_prev;
        cache->i = std::move(ig);
        cache->f = std::move(fg);
        cache->g = std::move(gg);
        cache->o = std::move(og);
        cache->c = c_out;
        cache->tanh_c = std::move(tanh_c);
    }
}

void lstm_cell_backward(const Tensor& dh, const Tensor& dc, const LstmStepCache& cache,
                        const LstmWeights& w, const LstmGrads& g, Tensor& dx,
                        Tensor& dh_prev, Tensor& dc_prev) {
    const std::size_t hid = dh.size();
    const std::size_t in = cache.x.size();

    std::vector<double> dpre(4 * hid);
    dc_prev = Tensor({hid});
    for (std::size_t j = 0; j < hid; ++j) {
        const double do_ = dh[j] * cache.tanh_c[j];
        const double dct = dc[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
        const double di = dct * cache.g[j];
        const double df = dct * cache.c_prev[j];
        const double dg = dct * cache.i[j];
        dc_prev[j] = dct * cache.f[j];
        dpre[j] = di * cache.i[j] * (1.0 - cache.i[j]);
        dpre[hid + j] = df * cache.f[j] * (1.0 - cache.f[j]);
        dpre[2 * hid + j] = dg * (1.0 - cache.g[j] * cache.g[j]);
        dpre[3 * hid + j] = do_ * cache.o[j] * (1.0 - cache.o[j]);
    }

    // accumulate weight gradients: dWx += x (outer) dpre, dWh += h_prev (outer) dpre
    for (std::size_t k = 0; k < in; ++k) {
        const double xv = cache.x[k];
        if (xv != 0.0) {
            double* row = &g.wx->data[k * 4 * hid];
            for (std::size_t j = 0; j < 4 * hid; ++j) row[j] += xv * dpre[j];
        }
    }
    for (std::size_t k = 0; k < hid; ++k) {
        const double hv = cache.h_prev[k];
        if (hv != 0.0) {
            double* row = &g.wh->data[k * 4 * hid];
            for (std::size_t j = 0; j < 4 * hid; ++j) row[j] += hv * dpre[j];
        }
    }
    for (std::size_t j = 0; j < 4 * hid; ++j) g.b->data[j] += dpre[j];

    dx = Tensor({in});
    for (std::size_t k = 0; k < in; ++k) {
        const double* row = &w.wx->data[k * 4 * hid];
        double acc = 0.0;
        for (std::size_t j = 0; j < 4 * hid; ++j) acc += row[j] * dpre[j];
        dx[k] = acc;
    }
    dh_prev = Tensor({hid});
    for (std::size_t k = 0; k < hid; ++k) {
        const double* row = &w.wh->data[k * 4 * hid];
        double acc = 0.0;
        for (std::size_t j = 0; j < 4 * hid; ++j) acc += row[j] * dpre[j];
        dh_prev[k] = acc;
    }
}

Tensor lstm_sequence_forward(const Tensor& xs, const LstmWeights& w, std::size_t hid,
                             Direction dir, LstmSeqCache* cache) {
    if (xs.rows() < 1) throw numeric_error("lstm sequence needs at least one step");
    Tensor input = dir == Direction::Backward ? reverse_rows(xs) : xs;
    const std::size_t steps = input.rows(), in = input.cols();

    Tensor hs({steps, hid});
    Tensor h({hid}), c({hid});
    if (cache) {
        cache->steps.resize(steps);
        cache->reversed = dir == Direction::Backward;
        cache->in = in;
        cache->hid = hid;
    }
    for (std::size_t t = 0; t < steps; ++t) {
        Tensor x({in});
        for (std::size_t j = 0; j < in; ++j) x[j] = input(t, j);
        Tensor h_new, c_new;
        lstm_cell_forward(x, h, c, w, h_new, c_new, cache ? &cache->steps[t] : nullptr);
        h = std::move(h_new);
        c = std::move(c_new);
        for (std::size_t j = 0; j < hid; ++j) hs(t, j) = h[j];
    }
    return dir == Direction::Backward ? reverse_rows(hs) : hs;
}

Tensor lstm_sequence_backward(const Tensor& dhs, const LstmSeqCache& cache,
                              const LstmWeights& w, const LstmGrads& g) {
    Tensor dout = cache.reversed ? reverse_rows(dhs) : dhs;
    const std::size_t steps = dout.rows(), hid = cache.hid, in = cache.in;

    Tensor dxs({steps, in});
    Tensor dh({hid}), dc({hid});
    for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t j = 0; j < hid; ++j) dh[j] += dout(t, j);
        Tensor dx, dh_prev, dc_prev;
        lstm_cell_backward(dh, dc, cache.steps[t], w, g, dx, dh_prev, dc_prev);
        for (std::size_t j = 0; j < in; ++j) dxs(t, j) = dx[j];
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }
    return cache.reversed ? reverse_rows(dxs) : dxs;
}

Tensor bilstm_forward(const Tensor& xs, const LstmWeights& wf, const LstmWeights& wb,
                      std::size_t hid, BilstmCache* cache) {
    Tensor hf = lstm_sequence_forward(xs, wf, hid, Direction::Forward,
                                      cache ? &cache->fwd : nullptr);
    Tensor hb = lstm_sequence_forward(xs, wb, hid, Direction::Backward,
                                      cache ? &cache->bwd : nullptr);
    Tensor out({xs.rows(), 2 * hid});
    for (std::size_t t = 0; t < xs.rows(); ++t) {
        for (std::size_t j = 0; j < hid; ++j) {
            out(t, j) = hf(t, j);
            out(t, hid + j) = hb(t, j);
        }
    }
    return out;
}

Tensor bilstm_backward(const Tensor& dys, const BilstmCache& cache, const LstmWeights& wf,
                       const LstmWeights& wb, const LstmGrads& gf, const LstmGrads& gb) {
    const std::size_t steps = dys.rows(), hid = dys.cols() / 2;
    Tensor dhf({steps, hid}), dhb({steps, hid});
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < hid; ++j) {
            dhf(t, j) = dys(t, j);
            dhb(t, j) = dys(t, hid + j);
        }
    }
    Tensor dxf = lstm_sequence_backward(dhf, cache.fwd, wf, gf);
    Tensor dxb = lstm_sequence_backward(dhb, cache.bwd, wb, gb);
    for (std::size_t i = 0; i < dxf.size(); ++i) dxf.data[i] += dxb.data[i];
    return dxf;
}

void softmax_rows(Tensor& s) {
    const std::size_t n = s.rows(), c = s.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = &s.data[i * c];
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < c; ++j) row[j] /= sum;
    }
}

Tensor mha_forward(const Tensor& x, const Tensor& wq, const Tensor& wk, const Tensor& wv,
                   const Tensor& wo, int heads, MhaCache* cache) {
    const std::size_t t_len = x.rows(), d = x.cols();
    if (heads < 1 || d % static_cast<std::size_t>(heads) != 0)
        throw numeric_error("attention width " + std::to_string(d) +
                            " not divisible by " + std::to_string(heads) + " heads");
    const std::size_t dk = d / static_cast<std::size_t>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Tensor q = matmul(x, wq);
    Tensor k = matmul(x, wk);
    Tensor v = matmul(x, wv);
    Tensor concat({t_len, d});
    std::vector<Tensor> attn(static_cast<std::size_t>(heads));

    for (int h = 0; h < heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * dk;
        Tensor scores({t_len, t_len});
        for (std::size_t i = 0; i < t_len; ++i)
            for (std::size_t j = 0; j < t_len; ++j) {
                double acc = 0.0;
                for (std::size_t a = 0; a < dk; ++a) acc += q(i, off + a) * k(j, off + a);
                scores(i, j) = acc * scale;
            }
        softmax_rows(scores);
        for (std::size_t i = 0; i < t_len; ++i)
            for (std::size_t a = 0; a < dk; ++a) {
                double acc = 0.0;
                for (std::size_t j = 0; j < t_len; ++j) acc += scores(i, j) * v(j, off + a);
                concat(i, off + a) = acc;
            }
        attn[static_cast<std::size_t>(h)] = std::move(scores);
    }

    Tensor y = matmul(concat, wo);
    if (cache) {
        cache->x = x;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->concat = std::move(concat);
        cache->attn = std::move(attn);
    }
    return y;
}

Tensor mha_backward(const Tensor& dy, const MhaCache& cache, const Tensor& wq,
                    const Tensor& wk, const Tensor& wv, const Tensor& wo, int heads,
                    Tensor& dwq, Tensor& dwk, Tensor& dwv, Tensor& dwo) {
    const std::size_t t_len = dy.rows(), d = dy.cols();
    const std::size_t dk = d / static_cast<std::size_t>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Tensor dwoi = matmul_tn(cache.concat, dy);
    for (std::size_t i = 0; i < dwo.size(); ++i) dwo.data[i] += dwoi.data[i];
    Tensor dconcat = matmul_nt(dy, wo);

    Tensor dq({t_len, d}), dkt({t_len, d}), dv({t_len, d});
    for (int h = 0; h < heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * dk;
        const Tensor& a = cache.attn[static_cast<std::size_t>(h)];

        // dV_head = A^T dH ; dA = dH V^T
        Tensor da({t_len, t_len});
        for (std::size_t i = 0; i < t_len; ++i)
            for (std::size_t j = 0; j < t_len; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < dk; ++c)
                    acc += dconcat(i, off + c) * cache.v(j, off + c);
                da(i, j) = acc;
            }
        for (std::size_t j = 0; j < t_len; ++j)
            for (std::size_t c = 0; c < dk; ++c) {
                double acc = 0.0;
                for (std::size_t i = 0; i < t_len; ++i)
                    acc += a(i, j) * dconcat(i, off + c);
                dv(j, off + c) = acc;
            }

        // softmax backward per row: dS = A .* (dA - rowsum(dA .* A))
        Tensor ds({t_len, t_len});
        for (std::size_t i = 0; i < t_len; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < t_len; ++j) dot += da(i, j) * a(i, j);
            for (std::size_t j = 0; j < t_len; ++j)
                ds(i, j) = a(i, j) * (da(i, j) - dot) * scale;
        }

        // dQ_head = dS K ; dK_head = dS^T Q
        for (std::size_t i = 0; i < t_len; ++i)
            for (std::size_t c = 0; c < dk; ++c) {
                double accq = 0.0;
                for (std::size_t j = 0; j < t_len; ++j) accq += ds(i, j) * cache.k(j, off + c);
                dq(i, off + c) = accq;
            }
        for (std::size_t j = 0; j < t_len; ++j)
            for (std::size_t c = 0; c < dk; ++c) {
                double acck = 0.0;
                for (std::size_t i = 0; i < t_len; ++i) acck += ds(i, j) * cache.q(i, off + c);
                dkt(j, off + c) = acck;
            }
    }

    Tensor dwqi = matmul_tn(cache.x, dq);
    Tensor dwki = matmul_tn(cache.x, dkt);
    Tensor dwvi = matmul_tn(cache.x, dv);
    for (std::size_t i = 0; i < dwq.size(); ++i) {
        dwq.data[i] += dwqi.data[i];
        dwk.data[i] += dwki.data[i];
        dwv.data[i] += dwvi.data[i];
    }

    Tensor dx = matmul_nt(dq, wq);
    Tensor dx2 = matmul_nt(dkt, wk);
    Tensor dx3 = matmul_nt(dv, wv);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dx2.data[i] + dx3.data[i];
    return dx;
}

Tensor dropout_forward(const Tensor& x, double rate, bool train, Rng& rng,
                       DropoutCache* cache) {
    if (rate < 0.0 || rate >= 1.0) throw numeric_error("dropout rate must be in [0, 1)");
    Tensor y = x;
    if (!train || rate == 0.0) {
        if (cache) cache->scale.assign(x.size(), 1.0);
        return y;
    }
    const double keep = 1.0 - rate;
    if (cache) cache->scale.resize(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
        y.data[i] *= s;
        if (cache) cache->scale[i] = s;
    }
    return y;
}

Tensor dropout_backward(const Tensor& dy, const DropoutCache& cache) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= cache.scale[i];
    return dx;
}

double gradient_check(const std::function<double(bool)>& loss, ParamStore& store,
                      std::vector<double>* inputs, std::vector<double>* input_grads,
                      double step) {
    store.zero_grad();
    if (input_grads) std::fill(input_grads->begin(), input_grads->end(), 0.0);
    loss(true);

    // snapshot analytic gradients before finite differencing
    std::vector<std::vector<double>> analytic;
    for (const auto& e : store.entries()) analytic.push_back(e.grad.data);
    std::vector<double> analytic_in;
    if (input_grads) analytic_in = *input_grads;

    double worst = 0.0;
    auto probe = [&](double* slot, double a) {
        const double saved = *slot;
        *slot = saved + step;
        double up = loss(false);
        *slot = saved - step;
        double down = loss(false);
        *slot = saved;
        const double n = (up - down) / (2.0 * step);
        const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
        worst = std::max(worst, rel);
    };

    for (std::size_t p = 0; p < store.entries().size(); ++p) {
        auto& e = store.entries()[p];
        for (std::size_t i = 0; i < e.value.size(); ++i)
            probe(&e.value.data[i], analytic[p][i]);
    }
    if (inputs && input_grads)
        for (std::size_t i = 0; i < inputs->size(); ++i)
            probe(&(*inputs)[i], analytic_in[i]);
    return worst;
}

} // namespace mapos::nn
