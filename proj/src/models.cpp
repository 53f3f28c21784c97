#include "models.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>

#include "error.hpp"
#include "textio.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts need byte swaps");

namespace mapos::model {

namespace {

std::string block_name(int k, const char* part) {
    return "blk" + std::to_string(k) + "." + part;
}

std::size_t lstm_param_count(std::size_t in, std::size_t hid) {
    return 4 * hid * (in + hid + 1);
}

void init_lstm_block(nn::ParamStore& store, const std::string& prefix, std::size_t in,
                     std::size_t hid, Rng& rng) {
    nn::Tensor& wx = store.add(prefix + ".wx", {in, 4 * hid});
    nn::Tensor& wh = store.add(prefix + ".wh", {hid, 4 * hid});
    nn::Tensor& b = store.add(prefix + ".b", {4 * hid});
    nn::init_xavier(wx, in, 4 * hid, rng);
    nn::init_recurrent(wh, hid, rng);
    // forget-gate bias starts open so early training can carry state
    for (std::size_t j = 0; j < hid; ++j) b[hid + j] = 1.0;
}

void init_dense_block(nn::ParamStore& store, const std::string& prefix, std::size_t in,
                      std::size_t out, Rng& rng) {
    nn::Tensor& w = store.add(prefix + ".w", {in, out});
    store.add(prefix + ".b", {out});
    nn::init_xavier(w, in, out, rng);
}

nn::LstmWeights lstm_weights(const nn::ParamStore& store, const std::string& prefix) {
    return {&store.value(prefix + ".wx"), &store.value(prefix + ".wh"),
            &store.value(prefix + ".b")};
}

nn::LstmGrads lstm_grads(nn::ParamStore& store, const std::string& prefix) {
    return {&store.grad(prefix + ".wx"), &store.grad(prefix + ".wh"),
            &store.grad(prefix + ".b")};
}

// sinusoidal positional encoding added to the transformer embedding
void add_positional_encoding(nn::Tensor& x) {
    const std::size_t t_len = x.rows(), d = x.cols();
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t j = 0; j + 1 < d; j += 2) {
            double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
            x(t, j) += std::sin(static_cast<double>(t) * freq);
            x(t, j + 1) += std::cos(static_cast<double>(t) * freq);
        }
    }
}

} // namespace

Predictor::Predictor(ModelKind kind, const ModelConfig& cfg, std::size_t antennas,
                     std::uint64_t init_seed)
    : kind_(kind), cfg_(cfg), antennas_(antennas) {
    if (cfg_.d_model % cfg_.heads != 0)
        throw config_error("model width must be divisible by the head count");
    build_params(init_seed);
}

void Predictor::build_params(std::uint64_t init_seed) {
    Rng rng = Rng::substream(init_seed, {0x1217});
    const std::size_t m = antennas_;
    const std::size_t in3 = 3 * m;
    const std::size_t out = static_cast<std::size_t>(cfg_.t_pre) * in3;
    const std::size_t h = static_cast<std::size_t>(cfg_.lstm_hidden);
    const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
    const std::size_t bh = static_cast<std::size_t>(cfg_.bilstm_hidden);

    switch (kind_) {
        case ModelKind::Proposed: {
            for (std::size_t a = 0; a < m; ++a)
                init_lstm_block(store_, "ant" + std::to_string(a), 3, h, rng);
            if (!cfg_.attention_over_antennas) {
                init_dense_block(store_, "fuse", m * h, d, rng);
            } else {
                init_dense_block(store_, "token", h, d, rng);
                init_dense_block(store_, "fold", m * d, d, rng);
            }
            for (const char* n : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
                nn::Tensor& w = store_.add(n, {d, d});
                nn::init_xavier(w, d, d, rng);
            }
            const std::size_t f_in = d + m * h;
            init_lstm_block(store_, "bi.f", f_in, bh, rng);
            init_lstm_block(store_, "bi.b", f_in, bh, rng);
            init_dense_block(store_, "head", 2 * bh, out, rng);
            break;
        }
        case ModelKind::LstmOnly: {
            const std::size_t hh = static_cast<std::size_t>(cfg_.lstm_only_hidden);
            for (int l = 0; l < cfg_.lstm_only_layers; ++l)
                init_lstm_block(store_, "l" + std::to_string(l), l == 0 ? in3 : hh, hh, rng);
            init_dense_block(store_, "head", hh, out, rng);
            break;
        }
        case ModelKind::TransformerOnly: {
            init_dense_block(store_, "embed", in3, d, rng);
            for (int k = 0; k < cfg_.transformer_blocks; ++k) {
                for (const char* part : {"wq", "wk", "wv", "wo"}) {
                    nn::Tensor& w = store_.add(block_name(k, part), {d, d});
                    nn::init_xavier(w, d, d, rng);
                }
                init_dense_block(store_, block_name(k, "ff1"), d,
                                 static_cast<std::size_t>(cfg_.transformer_ff), rng);
                init_dense_block(store_, block_name(k, "ff2"),
                                 static_cast<std::size_t>(cfg_.transformer_ff), d, rng);
            }
            init_dense_block(store_, "head", d, out, rng);
            break;
        }
        case ModelKind::Narx: {
            const std::size_t nd = static_cast<std::size_t>(cfg_.narx_delay);
            const std::size_t nh = static_cast<std::size_t>(cfg_.narx_hidden);
            init_dense_block(store_, "l1", nd * in3, nh, rng);
            init_dense_block(store_, "l2", nh, in3, rng);
            break;
        }
    }
}

std::size_t Predictor::expected_parameter_count() const {
    const std::size_t m = antennas_;
    const std::size_t in3 = 3 * m;
    const std::size_t out = static_cast<std::size_t>(cfg_.t_pre) * in3;
    const std::size_t h = static_cast<std::size_t>(cfg_.lstm_hidden);
    const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
    const std::size_t bh = static_cast<std::size_t>(cfg_.bilstm_hidden);

    switch (kind_) {
        case ModelKind::Proposed: {
            std::size_t n = m * lstm_param_count(3, h);
            if (!cfg_.attention_over_antennas)
                n += m * h * d + d;
            else
                n += (h * d + d) + (m * d * d + d);
            n += 4 * d * d;
            const std::size_t f_in = d + m * h;
            n += 2 * lstm_param_count(f_in, bh);
            n += 2 * bh * out + out;
            return n;
        }
        case ModelKind::LstmOnly: {
            const std::size_t hh = static_cast<std::size_t>(cfg_.lstm_only_hidden);
            std::size_t n = 0;
            for (int l = 0; l < cfg_.lstm_only_layers; ++l)
                n += lstm_param_count(l == 0 ? in3 : hh, hh);
            return n + hh * out + out;
        }
        case ModelKind::TransformerOnly: {
            const std::size_t ff = static_cast<std::size_t>(cfg_.transformer_ff);
            std::size_t n = in3 * d + d;
            n += static_cast<std::size_t>(cfg_.transformer_blocks) *
                 (4 * d * d + (d * ff + ff) + (ff * d + d));
            return n + d * out + out;
        }
        case ModelKind::Narx: {
            const std::size_t nd = static_cast<std::size_t>(cfg_.narx_delay);
            const std::size_t nh = static_cast<std::size_t>(cfg_.narx_hidden);
            return nd * in3 * nh + nh + nh * in3 + in3;
        }
    }
    return 0;
}

nn::Tensor Predictor::forward(const nn::Tensor& history, bool train, Rng* drop_rng,
                              ForwardCaches* caches) const {
    const std::size_t t_len = history.rows();
    const std::size_t m = antennas_;
    const std::size_t in3 = 3 * m;
    if (history.cols() != in3)
        throw numeric_error("history block has width " + std::to_string(history.cols()) +
                            ", expected " + std::to_string(in3));
    if (t_len != static_cast<std::size_t>(cfg_.t_hist_win))
        throw numeric_error("history block has " + std::to_string(t_len) +
                            " steps, expected " + std::to_string(cfg_.t_hist_win));
    const std::size_t out_w = in3;
    const std::size_t t_pre = static_cast<std::size_t>(cfg_.t_pre);

    ForwardCaches local;
    ForwardCaches& cc = caches ? *caches : local;

    nn::Tensor flat_out; // [1, t_pre*in3]
    switch (kind_) {
        case ModelKind::Proposed: {
            const std::size_t h = static_cast<std::size_t>(cfg_.lstm_hidden);
            const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
            const std::size_t bh = static_cast<std::size_t>(cfg_.bilstm_hidden);

            cc.ant_lstm.resize(m);
            nn::Tensor f({t_len, m * h});
            for (std::size_t a = 0; a < m; ++a) {
                nn::Tensor xs({t_len, 3});
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t j = 0; j < 3; ++j) xs(t, j) = history(t, 3 * a + j);
                nn::Tensor hs = nn::lstm_sequence_forward(
                    xs, lstm_weights(store_, "ant" + std::to_string(a)), h,
                    nn::Direction::Forward, caches ? &cc.ant_lstm[a] : nullptr);
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t j = 0; j < h; ++j) f(t, a * h + j) = hs(t, j);
            }

            nn::Tensor attn;
            if (!cfg_.attention_over_antennas) {
                nn::Tensor z = nn::dense_forward(f, store_.value("fuse.w"),
                                                 store_.value("fuse.b"),
                                                 caches ? &cc.fuse : nullptr);
                attn = nn::mha_forward(z, store_.value("attn.wq"), store_.value("attn.wk"),
                                       store_.value("attn.wv"), store_.value("attn.wo"),
                                       cfg_.heads, caches ? &cc.mha : nullptr);
            } else {
                // tokens = antennas at each step, attention weights shared over steps
                nn::Tensor tokens({t_len * m, h});
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < h; ++j)
                            tokens(t * m + a, j) = f(t, a * h + j);
                nn::Tensor proj = nn::dense_forward(tokens, store_.value("token.w"),
                                                    store_.value("token.b"),
                                                    caches ? &cc.token : nullptr);
                cc.mha_steps.resize(t_len);
                nn::Tensor mixed({t_len, m * d});
                for (std::size_t t = 0; t < t_len; ++t) {
                    nn::Tensor step({m, d});
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < d; ++j) step(a, j) = proj(t * m + a, j);
                    nn::Tensor mix = nn::mha_forward(
                        step, store_.value("attn.wq"), store_.value("attn.wk"),
                        store_.value("attn.wv"), store_.value("attn.wo"), cfg_.heads,
                        caches ? &cc.mha_steps[t] : nullptr);
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < d; ++j) mixed(t, a * d + j) = mix(a, j);
                }
                attn = nn::dense_forward(mixed, store_.value("fold.w"),
                                         store_.value("fold.b"),
                                         caches ? &cc.fold : nullptr);
            }

            Rng no_drop(0);
            nn::Tensor dropped = nn::dropout_forward(attn, cfg_.dropout, train,
                                                     drop_rng ? *drop_rng : no_drop,
                                                     caches ? &cc.drop : nullptr);

            nn::Tensor concat({t_len, d + m * h});
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < d; ++j) concat(t, j) = dropped(t, j);
                for (std::size_t j = 0; j < m * h; ++j) concat(t, d + j) = f(t, j);
            }

            nn::Tensor bi = nn::bilstm_forward(concat, lstm_weights(store_, "bi.f"),
                                               lstm_weights(store_, "bi.b"), bh,
                                               caches ? &cc.bilstm : nullptr);
            nn::Tensor last({1, 2 * bh});
            for (std::size_t j = 0; j < 2 * bh; ++j) last(0, j) = bi(t_len - 1, j);
            flat_out = nn::dense_forward(last, store_.value("head.w"),
                                         store_.value("head.b"),
                                         caches ? &cc.head : nullptr);
            break;
        }
        case ModelKind::LstmOnly: {
            const std::size_t hh = static_cast<std::size_t>(cfg_.lstm_only_hidden);
            cc.stack.resize(static_cast<std::size_t>(cfg_.lstm_only_layers));
            nn::Tensor x = history;
            for (int l = 0; l < cfg_.lstm_only_layers; ++l)
                x = nn::lstm_sequence_forward(
                    x, lstm_weights(store_, "l" + std::to_string(l)), hh,
                    nn::Direction::Forward,
                    caches ? &cc.stack[static_cast<std::size_t>(l)] : nullptr);
            nn::Tensor last({1, hh});
            for (std::size_t j = 0; j < hh; ++j) last(0, j) = x(t_len - 1, j);
            flat_out = nn::dense_forward(last, store_.value("head.w"),
                                         store_.value("head.b"),
                                         caches ? &cc.head : nullptr);
            break;
        }
        case ModelKind::TransformerOnly: {
            const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
            nn::Tensor x = nn::dense_forward(history, store_.value("embed.w"),
                                             store_.value("embed.b"),
                                             caches ? &cc.embed : nullptr);
            add_positional_encoding(x);
            const std::size_t blocks = static_cast<std::size_t>(cfg_.transformer_blocks);
            cc.block_mha.resize(blocks);
            cc.block_ff1.resize(blocks);
            cc.block_ff2.resize(blocks);
            cc.block_ff_act.resize(blocks);
            for (std::size_t k = 0; k < blocks; ++k) {
                int kk = static_cast<int>(k);
                nn::Tensor a = nn::mha_forward(
                    x, store_.value(block_name(kk, "wq")), store_.value(block_name(kk, "wk")),
                    store_.value(block_name(kk, "wv")), store_.value(block_name(kk, "wo")),
                    cfg_.heads, caches ? &cc.block_mha[k] : nullptr);
                for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += a.data[i];
                nn::Tensor hmid = nn::dense_forward(
                    x, store_.value(block_name(kk, "ff1") + ".w"),
                    store_.value(block_name(kk, "ff1") + ".b"),
                    caches ? &cc.block_ff1[k] : nullptr);
                for (auto& v : hmid.data) v = std::tanh(v);
                if (caches) cc.block_ff_act[k] = hmid;
                nn::Tensor f2 = nn::dense_forward(
                    hmid, store_.value(block_name(kk, "ff2") + ".w"),
                    store_.value(block_name(kk, "ff2") + ".b"),
                    caches ? &cc.block_ff2[k] : nullptr);
                for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += f2.data[i];
            }
            nn::Tensor last({1, d});
            for (std::size_t j = 0; j < d; ++j) last(0, j) = x(t_len - 1, j);
            flat_out = nn::dense_forward(last, store_.value("head.w"),
                                         store_.value("head.b"),
                                         caches ? &cc.head : nullptr);
            break;
        }
        case ModelKind::Narx: {
            const std::size_t nd = static_cast<std::size_t>(cfg_.narx_delay);
            if (t_len < nd)
                throw numeric_error("NARX delay order exceeds the history window");
            cc.narx_l1.resize(t_pre);
            cc.narx_l2.resize(t_pre);
            cc.narx_act.resize(t_pre);
            std::vector<double> line(nd * in3);
            for (std::size_t j = 0; j < nd; ++j)
                for (std::size_t c = 0; c < in3; ++c)
                    line[j * in3 + c] = history(t_len - nd + j, c);

            flat_out = nn::Tensor({1, t_pre * in3});
            for (std::size_t s = 0; s < t_pre; ++s) {
                nn::Tensor input({1, nd * in3});
                input.data = line;
                nn::Tensor mid = nn::dense_forward(input, store_.value("l1.w"),
                                                   store_.value("l1.b"),
                                                   caches ? &cc.narx_l1[s] : nullptr);
                for (auto& v : mid.data) v = std::tanh(v);
                if (caches) cc.narx_act[s] = mid;
                nn::Tensor pred = nn::dense_forward(mid, store_.value("l2.w"),
                                                    store_.value("l2.b"),
                                                    caches ? &cc.narx_l2[s] : nullptr);
                // step as a displacement off the newest delay entry
                for (std::size_t c = 0; c < in3; ++c)
                    flat_out(0, s * in3 + c) = line[(nd - 1) * in3 + c] + pred(0, c);
                // shift the tapped delay line
                std::rotate(line.begin(), line.begin() + static_cast<long>(in3), line.end());
                for (std::size_t c = 0; c < in3; ++c)
                    line[(nd - 1) * in3 + c] = flat_out(0, s * in3 + c);
            }
            break;
        }
    }

    nn::Tensor out({t_pre, out_w});
    out.data = flat_out.data;
    // block outputs are displacements around the last observed layout, which
    // makes the all-zero-head network the persistence predictor
    if (kind_ != ModelKind::Narx)
        for (std::size_t s = 0; s < t_pre; ++s)
            for (std::size_t c = 0; c < out_w; ++c) out(s, c) += history(t_len - 1, c);
    if (!out.finite()) throw numeric_error("prediction produced non-finite values");
    return out;
}

nn::Tensor Predictor::predict_normalized(const nn::Tensor& history) const {
    return forward(history, false, nullptr, nullptr);
}

nn::Tensor Predictor::backward(const nn::Tensor& dy, const ForwardCaches& cc) {
    const std::size_t m = antennas_;
    const std::size_t in3 = 3 * m;
    const std::size_t t_len = static_cast<std::size_t>(cfg_.t_hist_win);
    const std::size_t t_pre = static_cast<std::size_t>(cfg_.t_pre);

    nn::Tensor dflat({1, t_pre * in3});
    dflat.data = dy.data;

    switch (kind_) {
        case ModelKind::Proposed: {
            const std::size_t h = static_cast<std::size_t>(cfg_.lstm_hidden);
            const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
            const std::size_t bh = static_cast<std::size_t>(cfg_.bilstm_hidden);

            nn::Tensor dlast = nn::dense_backward(dflat, cc.head, store_.value("head.w"),
                                                  store_.grad("head.w"),
                                                  store_.grad("head.b"));
            nn::Tensor dbi({t_len, 2 * bh});
            for (std::size_t j = 0; j < 2 * bh; ++j) dbi(t_len - 1, j) = dlast(0, j);
            nn::Tensor dconcat = nn::bilstm_backward(dbi, cc.bilstm,
                                                     lstm_weights(store_, "bi.f"),
                                                     lstm_weights(store_, "bi.b"),
                                                     lstm_grads(store_, "bi.f"),
                                                     lstm_grads(store_, "bi.b"));
            nn::Tensor ddrop({t_len, d});
            nn::Tensor df({t_len, m * h});
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < d; ++j) ddrop(t, j) = dconcat(t, j);
                for (std::size_t j = 0; j < m * h; ++j) df(t, j) = dconcat(t, d + j);
            }
            nn::Tensor dattn = nn::dropout_backward(ddrop, cc.drop);

            if (!cfg_.attention_over_antennas) {
                nn::Tensor dz = nn::mha_backward(
                    dattn, cc.mha, store_.value("attn.wq"), store_.value("attn.wk"),
                    store_.value("attn.wv"), store_.value("attn.wo"), cfg_.heads,
                    store_.grad("attn.wq"), store_.grad("attn.wk"), store_.grad("attn.wv"),
                    store_.grad("attn.wo"));
                nn::Tensor df2 = nn::dense_backward(dz, cc.fuse, store_.value("fuse.w"),
                                                    store_.grad("fuse.w"),
                                                    store_.grad("fuse.b"));
                for (std::size_t i = 0; i < df.size(); ++i) df.data[i] += df2.data[i];
            } else {
                nn::Tensor dmixed = nn::dense_backward(dattn, cc.fold,
                                                       store_.value("fold.w"),
                                                       store_.grad("fold.w"),
                                                       store_.grad("fold.b"));
                nn::Tensor dproj({t_len * m, d});
                for (std::size_t t = 0; t < t_len; ++t) {
                    nn::Tensor dmix({m, d});
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < d; ++j)
                            dmix(a, j) = dmixed(t, a * d + j);
                    nn::Tensor dstep = nn::mha_backward(
                        dmix, cc.mha_steps[t], store_.value("attn.wq"),
                        store_.value("attn.wk"), store_.value("attn.wv"),
                        store_.value("attn.wo"), cfg_.heads, store_.grad("attn.wq"),
                        store_.grad("attn.wk"), store_.grad("attn.wv"),
                        store_.grad("attn.wo"));
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < d; ++j)
                            dproj(t * m + a, j) = dstep(a, j);
                }
                nn::Tensor dtokens = nn::dense_backward(dproj, cc.token,
                                                        store_.value("token.w"),
                                                        store_.grad("token.w"),
                                                        store_.grad("token.b"));
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t j = 0; j < h; ++j)
                            df(t, a * h + j) += dtokens(t * m + a, j);
            }

            nn::Tensor dhist({t_len, in3});
            for (std::size_t a = 0; a < m; ++a) {
                nn::Tensor dhs({t_len, h});
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t j = 0; j < h; ++j) dhs(t, j) = df(t, a * h + j);
                nn::Tensor dxs = nn::lstm_sequence_backward(
                    dhs, cc.ant_lstm[a], lstm_weights(store_, "ant" + std::to_string(a)),
                    lstm_grads(store_, "ant" + std::to_string(a)));
                for (std::size_t t = 0; t < t_len; ++t)
                    for (std::size_t j = 0; j < 3; ++j) dhist(t, 3 * a + j) = dxs(t, j);
            }
            for (std::size_t s = 0; s < t_pre; ++s)
                for (std::size_t cc2 = 0; cc2 < in3; ++cc2)
                    dhist(t_len - 1, cc2) += dy(s, cc2); // residual skip
            return dhist;
        }
        case ModelKind::LstmOnly: {
            const std::size_t hh = static_cast<std::size_t>(cfg_.lstm_only_hidden);
            nn::Tensor dlast = nn::dense_backward(dflat, cc.head, store_.value("head.w"),
                                                  store_.grad("head.w"),
                                                  store_.grad("head.b"));
            nn::Tensor dx({t_len, hh});
            for (std::size_t j = 0; j < hh; ++j) dx(t_len - 1, j) = dlast(0, j);
            for (int l = cfg_.lstm_only_layers - 1; l >= 0; --l)
                dx = nn::lstm_sequence_backward(
                    dx, cc.stack[static_cast<std::size_t>(l)],
                    lstm_weights(store_, "l" + std::to_string(l)),
                    lstm_grads(store_, "l" + std::to_string(l)));
            for (std::size_t s = 0; s < t_pre; ++s)
                for (std::size_t cc2 = 0; cc2 < in3; ++cc2)
                    dx(t_len - 1, cc2) += dy(s, cc2); // residual skip
            return dx;
        }
        case ModelKind::TransformerOnly: {
            const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
            nn::Tensor dlast = nn::dense_backward(dflat, cc.head, store_.value("head.w"),
                                                  store_.grad("head.w"),
                                                  store_.grad("head.b"));
            nn::Tensor dx({t_len, d});
            for (std::size_t j = 0; j < d; ++j) dx(t_len - 1, j) = dlast(0, j);
            for (int k = cfg_.transformer_blocks - 1; k >= 0; --k) {
                const std::size_t ku = static_cast<std::size_t>(k);
                // x_out = x_mid + ff2(tanh(ff1(x_mid)))
                nn::Tensor dh = nn::dense_backward(
                    dx, cc.block_ff2[ku], store_.value(block_name(k, "ff2") + ".w"),
                    store_.grad(block_name(k, "ff2") + ".w"),
                    store_.grad(block_name(k, "ff2") + ".b"));
                const nn::Tensor& act = cc.block_ff_act[ku];
                for (std::size_t i = 0; i < dh.size(); ++i)
                    dh.data[i] *= 1.0 - act.data[i] * act.data[i];
                nn::Tensor dmid = nn::dense_backward(
                    dh, cc.block_ff1[ku], store_.value(block_name(k, "ff1") + ".w"),
                    store_.grad(block_name(k, "ff1") + ".w"),
                    store_.grad(block_name(k, "ff1") + ".b"));
                for (std::size_t i = 0; i < dx.size(); ++i) dmid.data[i] += dx.data[i];
                // x_mid = x_in + mha(x_in)
                nn::Tensor dxin = nn::mha_backward(
                    dmid, cc.block_mha[ku], store_.value(block_name(k, "wq")),
                    store_.value(block_name(k, "wk")), store_.value(block_name(k, "wv")),
                    store_.value(block_name(k, "wo")), cfg_.heads,
                    store_.grad(block_name(k, "wq")), store_.grad(block_name(k, "wk")),
                    store_.grad(block_name(k, "wv")), store_.grad(block_name(k, "wo")));
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx.data[i] = dmid.data[i] + dxin.data[i];
            }
            // positional encoding is additive: gradient passes through unchanged
            nn::Tensor dhist = nn::dense_backward(dx, cc.embed, store_.value("embed.w"),
                                                  store_.grad("embed.w"),
                                                  store_.grad("embed.b"));
            for (std::size_t s = 0; s < t_pre; ++s)
                for (std::size_t cc2 = 0; cc2 < in3; ++cc2)
                    dhist(t_len - 1, cc2) += dy(s, cc2); // residual skip
            return dhist;
        }
        case ModelKind::Narx: {
            const std::size_t nd = static_cast<std::size_t>(cfg_.narx_delay);
            nn::Tensor dhist({t_len, in3});
            std::vector<std::vector<double>> dpred(t_pre, std::vector<double>(in3, 0.0));
            for (std::size_t s = 0; s < t_pre; ++s)
                for (std::size_t c = 0; c < in3; ++c) dpred[s][c] = dy(s, c);

            for (std::size_t s = t_pre; s-- > 0;) {
                nn::Tensor dp({1, in3});
                dp.data = dpred[s];
                nn::Tensor dmid = nn::dense_backward(dp, cc.narx_l2[s],
                                                     store_.value("l2.w"),
                                                     store_.grad("l2.w"),
                                                     store_.grad("l2.b"));
                const nn::Tensor& act = cc.narx_act[s];
                for (std::size_t i = 0; i < dmid.size(); ++i)
                    dmid.data[i] *= 1.0 - act.data[i] * act.data[i];
                nn::Tensor dinput = nn::dense_backward(dmid, cc.narx_l1[s],
                                                       store_.value("l1.w"),
                                                       store_.grad("l1.w"),
                                                       store_.grad("l1.b"));
                // direct residual path: the step rides on the newest delay entry,
                // virtual row (t_hist + s - 1) of history ++ predictions
                {
                    const long row = static_cast<long>(t_len) + static_cast<long>(s) - 1;
                    for (std::size_t c = 0; c < in3; ++c) {
                        if (row < static_cast<long>(t_len))
                            dhist(static_cast<std::size_t>(row), c) += dpred[s][c];
                        else
                            dpred[static_cast<std::size_t>(row - static_cast<long>(t_len))]
                                 [c] += dpred[s][c];
                    }
                }
                // delay slot j at step s is virtual row (t_hist - nd + s + j) of
                // history ++ predictions
                for (std::size_t j = 0; j < nd; ++j) {
                    const long row = static_cast<long>(t_len) - static_cast<long>(nd) +
                                     static_cast<long>(s) + static_cast<long>(j);
                    for (std::size_t c = 0; c < in3; ++c) {
                        const double g = dinput(0, j * in3 + c);
                        if (row < static_cast<long>(t_len))
                            dhist(static_cast<std::size_t>(row), c) += g;
                        else
                            dpred[static_cast<std::size_t>(row - static_cast<long>(t_len))]
                                 [c] += g;
                    }
                }
            }
            return dhist;
        }
    }
    throw numeric_error("unreachable model kind");
}

nn::Tensor Predictor::forward_teacher(const nn::Tensor& history, const nn::Tensor& targets,
                                      ForwardCaches* caches) const {
    if (kind_ != ModelKind::Narx)
        throw numeric_error("teacher-forced forward is a NARX training mode");
    const std::size_t t_len = history.rows();
    const std::size_t in3 = history.cols();
    const std::size_t t_pre = targets.rows();
    const std::size_t nd = static_cast<std::size_t>(cfg_.narx_delay);
    if (t_len < nd) throw numeric_error("NARX delay order exceeds the history window");

    ForwardCaches local;
    ForwardCaches& cc = caches ? *caches : local;
    cc.narx_l1.resize(t_pre);
    cc.narx_l2.resize(t_pre);
    cc.narx_act.resize(t_pre);

    // virtual sequence: history rows then true targets
    auto row_at = [&](long r, std::size_t c) {
        return r < static_cast<long>(t_len)
                   ? history(static_cast<std::size_t>(r), c)
                   : targets(static_cast<std::size_t>(r - static_cast<long>(t_len)), c);
    };

    nn::Tensor out({t_pre, in3});
    for (std::size_t s = 0; s < t_pre; ++s) {
        nn::Tensor input({1, nd * in3});
        const long base = static_cast<long>(t_len) - static_cast<long>(nd) +
                          static_cast<long>(s);
        for (std::size_t j = 0; j < nd; ++j)
            for (std::size_t c = 0; c < in3; ++c)
                input(0, j * in3 + c) = row_at(base + static_cast<long>(j), c);
        nn::Tensor mid = nn::dense_forward(input, store_.value("l1.w"), store_.value("l1.b"),
                                           caches ? &cc.narx_l1[s] : nullptr);
        for (auto& v : mid.data) v = std::tanh(v);
        if (caches) cc.narx_act[s] = mid;
        nn::Tensor pred = nn::dense_forward(mid, store_.value("l2.w"), store_.value("l2.b"),
                                            caches ? &cc.narx_l2[s] : nullptr);
        for (std::size_t c = 0; c < in3; ++c)
            out(s, c) = row_at(static_cast<long>(t_len) + static_cast<long>(s) - 1, c) +
                        pred(0, c);
    }
    if (!out.finite()) throw numeric_error("prediction produced non-finite values");
    return out;
}

void Predictor::backward_teacher(const nn::Tensor& dy, const ForwardCaches& cc) {
    // steps are independent under teacher forcing; only parameter gradients
    // are needed during training
    const std::size_t t_pre = dy.rows();
    const std::size_t in3 = dy.cols();
    for (std::size_t s = 0; s < t_pre; ++s) {
        nn::Tensor dp({1, in3});
        for (std::size_t c = 0; c < in3; ++c) dp(0, c) = dy(s, c);
        nn::Tensor dmid = nn::dense_backward(dp, cc.narx_l2[s], store_.value("l2.w"),
                                             store_.grad("l2.w"), store_.grad("l2.b"));
        const nn::Tensor& act = cc.narx_act[s];
        for (std::size_t i = 0; i < dmid.size(); ++i)
            dmid.data[i] *= 1.0 - act.data[i] * act.data[i];
        nn::Tensor dinput = nn::dense_backward(dmid, cc.narx_l1[s], store_.value("l1.w"),
                                               store_.grad("l1.w"), store_.grad("l1.b"));
        (void)dinput;
    }
}

// ---------- training ----------

namespace {

double eval_split_nmse(const Predictor& model, const data::WindowSet& ws,
                       const std::vector<std::size_t>& idx) {
    double num = 0.0, den = 0.0;
    const std::size_t in3 = ws.antennas * 3;
    for (std::size_t wi : idx) {
        nn::Tensor x({static_cast<std::size_t>(ws.t_hist), in3});
        x.data = ws.inputs[wi];
        nn::Tensor pred = model.predict_normalized(x);
        const auto& y = ws.targets[wi];
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = pred.data[i] - y[i];
            num += d * d;
            den += y[i] * y[i];
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

} // namespace

TrainResult train(Predictor& model, const data::WindowSet& ws, std::uint64_t seed) {
    if (ws.train_idx.empty()) throw config_error("training requires a non-empty train split");
    if (static_cast<std::size_t>(ws.t_hist) !=
            static_cast<std::size_t>(model.config().t_hist_win) ||
        ws.t_pre != model.config().t_pre)
        throw config_error("window geometry does not match the model configuration");

    const auto& cfgm = model.config();
    const std::size_t in3 = ws.antennas * 3;
    // validation falls back to the train split for degenerate tiny datasets
    const std::vector<std::size_t>& val_idx =
        ws.val_idx.empty() ? ws.train_idx : ws.val_idx;

    TrainResult result;
    result.best_val_nmse = std::numeric_limits<double>::infinity();
    std::vector<nn::Tensor> best_values = model.store().snapshot_values();

    std::vector<std::size_t> order(ws.train_idx);
    for (int epoch = 1; epoch <= cfgm.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng = Rng::substream(seed, {0xE0, static_cast<std::uint64_t>(epoch)});
        shuffle_rng.shuffle(order);

        double epoch_num = 0.0, epoch_den = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfgm.batch)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfgm.batch));
            double den = 0.0;
            for (std::size_t i = b; i < e; ++i)
                for (double v : ws.targets[order[i]]) den += v * v;
            if (den <= 0.0) den = 1.0;

            model.store().zero_grad();
            const bool teacher = model.kind() == ModelKind::Narx;
            double num = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t wi = order[i];
                nn::Tensor x({static_cast<std::size_t>(ws.t_hist), in3});
                x.data = ws.inputs[wi];
                const auto& y = ws.targets[wi];
                ForwardCaches caches;
                nn::Tensor pred;
                if (teacher) {
                    nn::Tensor yt({static_cast<std::size_t>(ws.t_pre), in3});
                    yt.data = y;
                    pred = model.forward_teacher(x, yt, &caches);
                } else {
                    Rng drop_rng = Rng::substream(seed, {0xD0,
                                                         static_cast<std::uint64_t>(epoch),
                                                         static_cast<std::uint64_t>(wi)});
                    pred = model.forward(x, true, &drop_rng, &caches);
                }
                nn::Tensor dy({static_cast<std::size_t>(ws.t_pre), in3});
                for (std::size_t j = 0; j < y.size(); ++j) {
                    const double diff = pred.data[j] - y[j];
                    num += diff * diff;
                    dy.data[j] = 2.0 * diff / den;
                }
                if (teacher)
                    model.backward_teacher(dy, caches);
                else
                    model.backward(dy, caches);
            }
            if (!std::isfinite(num))
                throw numeric_error("training diverged (non-finite loss) at epoch " +
                                    std::to_string(epoch));
            nn::adam_step(model.store(), cfgm.learning_rate);
            epoch_num += num;
            epoch_den += den;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_nmse = epoch_den > 0.0 ? epoch_num / epoch_den : 0.0;
        log.val_nmse = eval_split_nmse(model, ws, val_idx);
        if (!std::isfinite(log.val_nmse))
            throw numeric_error("validation diverged (non-finite loss) at epoch " +
                                std::to_string(epoch));
        const auto t1 = std::chrono::steady_clock::now();
        log.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.curve.push_back(log);

        if (log.val_nmse < result.best_val_nmse) {
            result.best_val_nmse = log.val_nmse;
            result.best_epoch = epoch;
            best_values = model.store().snapshot_values();
        }
    }
    model.store().restore_values(best_values);
    return result;
}

// ---------- prediction ----------

SavedNormalization norm_from_windows(const data::WindowSet& ws) {
    return {ws.norm_lo, ws.norm_span, ws.clamp_box};
}

Prediction predict(const Predictor& model, const SavedNormalization& norm,
                   const std::vector<double>& history_normalized) {
    const std::size_t in3 = model.antennas() * 3;
    const std::size_t t_hist = static_cast<std::size_t>(model.config().t_hist_win);
    if (history_normalized.size() != t_hist * in3)
        throw numeric_error("history has " + std::to_string(history_normalized.size()) +
                            " values, expected " + std::to_string(t_hist * in3));
    nn::Tensor x({t_hist, in3});
    x.data = history_normalized;
    nn::Tensor out = model.predict_normalized(x);

    Prediction p;
    p.coords = out.data;
    const double lo[3] = {norm.lo.x, norm.lo.y, norm.lo.z};
    const double span[3] = {norm.span.x, norm.span.y, norm.span.z};
    const double blo[3] = {norm.clamp_box.lo.x, norm.clamp_box.lo.y, norm.clamp_box.lo.z};
    const double bhi[3] = {norm.clamp_box.hi.x, norm.clamp_box.hi.y, norm.clamp_box.hi.z};
    for (std::size_t i = 0; i < p.coords.size(); ++i) {
        double v = p.coords[i] * span[i % 3] + lo[i % 3];
        if (v < blo[i % 3]) {
            v = blo[i % 3];
            ++p.clamped;
        } else if (v > bhi[i % 3]) {
            v = bhi[i % 3];
            ++p.clamped;
        }
        p.coords[i] = v;
    }
    return p;
}

// ---------- persistence ----------

namespace {

std::vector<std::pair<std::string, std::string>> model_cfg_kv(const ModelConfig& m) {
    auto d = [](double v) { return fmt_double(v, 17); };
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("t_hist_win", std::to_string(m.t_hist_win));
    kv.emplace_back("t_pre", std::to_string(m.t_pre));
    kv.emplace_back("lstm_hidden", std::to_string(m.lstm_hidden));
    kv.emplace_back("d_model", std::to_string(m.d_model));
    kv.emplace_back("heads", std::to_string(m.heads));
    kv.emplace_back("dropout", d(m.dropout));
    kv.emplace_back("bilstm_hidden", std::to_string(m.bilstm_hidden));
    kv.emplace_back("attention_axis", m.attention_over_antennas ? "antenna" : "time");
    kv.emplace_back("learning_rate", d(m.learning_rate));
    kv.emplace_back("epochs", std::to_string(m.epochs));
    kv.emplace_back("batch", std::to_string(m.batch));
    kv.emplace_back("train_stride", std::to_string(m.train_stride));
    kv.emplace_back("val_fraction", d(m.val_fraction));
    kv.emplace_back("test_fraction", d(m.test_fraction));
    kv.emplace_back("narx_delay", std::to_string(m.narx_delay));
    kv.emplace_back("narx_hidden", std::to_string(m.narx_hidden));
    kv.emplace_back("lstm_only_hidden", std::to_string(m.lstm_only_hidden));
    kv.emplace_back("lstm_only_layers", std::to_string(m.lstm_only_layers));
    kv.emplace_back("transformer_blocks", std::to_string(m.transformer_blocks));
    kv.emplace_back("transformer_ff", std::to_string(m.transformer_ff));
    return kv;
}

void apply_model_cfg(ModelConfig& m, const std::string& key, const std::string& value,
                     const std::string& path) {
    auto as_int = [&](int& slot) {
        long long v;
        if (!parse_int(value, &v))
            throw io_error(path + ": bad integer for " + key + ": '" + value + "'");
        slot = static_cast<int>(v);
    };
    auto as_double = [&](double& slot) {
        if (!parse_double(value, &slot))
            throw io_error(path + ": bad number for " + key + ": '" + value + "'");
    };
    if (key == "t_hist_win") as_int(m.t_hist_win);
    else if (key == "t_pre") as_int(m.t_pre);
    else if (key == "lstm_hidden") as_int(m.lstm_hidden);
    else if (key == "d_model") as_int(m.d_model);
    else if (key == "heads") as_int(m.heads);
    else if (key == "dropout") as_double(m.dropout);
    else if (key == "bilstm_hidden") as_int(m.bilstm_hidden);
    else if (key == "attention_axis") m.attention_over_antennas = (value == "antenna");
    else if (key == "learning_rate") as_double(m.learning_rate);
    else if (key == "epochs") as_int(m.epochs);
    else if (key == "batch") as_int(m.batch);
    else if (key == "train_stride") as_int(m.train_stride);
    else if (key == "val_fraction") as_double(m.val_fraction);
    else if (key == "test_fraction") as_double(m.test_fraction);
    else if (key == "narx_delay") as_int(m.narx_delay);
    else if (key == "narx_hidden") as_int(m.narx_hidden);
    else if (key == "lstm_only_hidden") as_int(m.lstm_only_hidden);
    else if (key == "lstm_only_layers") as_int(m.lstm_only_layers);
    else if (key == "transformer_blocks") as_int(m.transformer_blocks);
    else if (key == "transformer_ff") as_int(m.transformer_ff);
    else throw io_error(path + ": unknown model config key '" + key + "'");
}

std::string v3_str(const Vec3& v) {
    return fmt_double(v.x, 17) + " " + fmt_double(v.y, 17) + " " + fmt_double(v.z, 17);
}

Vec3 parse_v3(const std::string& s, const std::string& path, const std::string& what) {
    auto toks = tokens(s);
    Vec3 v;
    if (toks.size() != 3 || !parse_double(toks[0], &v.x) || !parse_double(toks[1], &v.y) ||
        !parse_double(toks[2], &v.z))
        throw io_error(path + ": malformed " + what);
    return v;
}

} // namespace

void save_model(const Predictor& model, const SavedNormalization& norm,
                const std::string& path) {
    std::string head;
    head += "MAPW v1\n";
    head += "kind " + cfg::model_kind_name(model.kind()) + "\n";
    head += "antennas " + std::to_string(model.antennas()) + "\n";
    for (const auto& [k, v] : model_cfg_kv(model.config())) head += "cfg " + k + " = " + v + "\n";
    head += "norm_lo " + v3_str(norm.lo) + "\n";
    head += "norm_span " + v3_str(norm.span) + "\n";
    head += "box_lo " + v3_str(norm.clamp_box.lo) + "\n";
    head += "box_hi " + v3_str(norm.clamp_box.hi) + "\n";

    std::size_t total_bytes = 0;
    for (const auto& e : model.store().entries()) {
        head += "param " + e.name;
        for (std::size_t dim : e.value.shape) head += " " + std::to_string(dim);
        head += "\n";
        total_bytes += e.value.size() * sizeof(double);
    }
    head += "data " + std::to_string(total_bytes) + "\n";

    std::string blob;
    blob.resize(total_bytes);
    std::size_t off = 0;
    for (const auto& e : model.store().entries()) {
        std::memcpy(blob.data() + off, e.value.data.data(), e.value.size() * sizeof(double));
        off += e.value.size() * sizeof(double);
    }
    write_text_file(path, head + blob);
}

LoadedModel load_model(const std::string& path) {
    const std::string text = read_text_file(path);

    // cursor-based line reader; the binary blob after "data N" may contain '\n'
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) throw io_error(path + ": unexpected end of manifest");
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    std::string magic = next_line();
    if (magic.rfind("MAPW", 0) != 0)
        throw io_error(path + ": malformed header: expected 'MAPW v1' magic");
    if (trim(magic.substr(4)) != "v1")
        throw io_error(path + ": unsupported model format '" + trim(magic.substr(4)) +
                       "'; this build reads 'v1'");

    ModelKind kind = ModelKind::Proposed;
    bool kind_seen = false;
    std::size_t antennas = 0;
    ModelConfig mc;
    SavedNormalization norm;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> manifest;
    std::size_t declared_bytes = 0;

    for (;;) {
        std::string line = trim(next_line());
        if (line.empty()) continue;
        if (line.rfind("data ", 0) == 0) {
            long long n;
            if (!parse_int(line.substr(5), &n) || n < 0)
                throw io_error(path + ": malformed data size line");
            declared_bytes = static_cast<std::size_t>(n);
            break;
        }
        if (line.rfind("kind ", 0) == 0) {
            try {
                kind = cfg::parse_model_kind(trim(line.substr(5)));
            } catch (const Error&) {
                throw io_error(path + ": manifest names unknown model kind '" +
                               trim(line.substr(5)) + "'");
            }
            kind_seen = true;
        } else if (line.rfind("antennas ", 0) == 0) {
            long long n;
            if (!parse_int(line.substr(9), &n) || n < 1)
                throw io_error(path + ": malformed antenna count");
            antennas = static_cast<std::size_t>(n);
        } else if (line.rfind("cfg ", 0) == 0) {
            std::string rest = line.substr(4);
            std::size_t eq = rest.find('=');
            if (eq == std::string::npos) throw io_error(path + ": malformed cfg line");
            apply_model_cfg(mc, trim(rest.substr(0, eq)), trim(rest.substr(eq + 1)), path);
        } else if (line.rfind("norm_lo ", 0) == 0) {
            norm.lo = parse_v3(line.substr(8), path, "norm_lo");
        } else if (line.rfind("norm_span ", 0) == 0) {
            norm.span = parse_v3(line.substr(10), path, "norm_span");
        } else if (line.rfind("box_lo ", 0) == 0) {
            norm.clamp_box.lo = parse_v3(line.substr(7), path, "box_lo");
        } else if (line.rfind("box_hi ", 0) == 0) {
            norm.clamp_box.hi = parse_v3(line.substr(7), path, "box_hi");
        } else if (line.rfind("param ", 0) == 0) {
            auto toks = tokens(line.substr(6));
            if (toks.size() < 2) throw io_error(path + ": malformed param line '" + line + "'");
            std::vector<std::size_t> shape;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                long long dim;
                if (!parse_int(toks[i], &dim) || dim < 1)
                    throw io_error(path + ": malformed shape in param '" + toks[0] + "'");
                shape.push_back(static_cast<std::size_t>(dim));
            }
            manifest.emplace_back(toks[0], std::move(shape));
        } else {
            throw io_error(path + ": unknown manifest line '" + line + "'");
        }
    }
    if (!kind_seen) throw io_error(path + ": manifest is missing the model kind");
    if (antennas == 0) throw io_error(path + ": manifest is missing the antenna count");

    const std::size_t available = text.size() - pos;
    if (available < declared_bytes)
        throw io_error(path + ": truncated weight blob: expected " +
                       std::to_string(declared_bytes) + " bytes, found " +
                       std::to_string(available));

    LoadedModel out;
    out.norm = norm;
    out.model = std::make_unique<Predictor>(kind, mc, antennas, 0);

    const auto& entries = out.model->store().entries();
    if (entries.size() != manifest.size())
        throw io_error(path + ": manifest lists " + std::to_string(manifest.size()) +
                       " parameters but kind '" + cfg::model_kind_name(kind) + "' has " +
                       std::to_string(entries.size()));
    std::size_t needed = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].name != manifest[i].first ||
            entries[i].value.shape != manifest[i].second)
            throw io_error(path + ": parameter " + std::to_string(i) + " ('" +
                           manifest[i].first + "') does not match model kind '" +
                           cfg::model_kind_name(kind) + "' (expected '" + entries[i].name +
                           "' " + entries[i].value.shape_str() + ")");
        needed += entries[i].value.size() * sizeof(double);
    }
    if (needed != declared_bytes)
        throw io_error(path + ": weight blob declares " + std::to_string(declared_bytes) +
                       " bytes but the manifest shapes need " + std::to_string(needed));

    std::size_t off = pos;
    for (auto& e : out.model->store().entries()) {
        std::memcpy(e.value.data.data(), text.data() + off, e.value.size() * sizeof(double));
        off += e.value.size() * sizeof(double);
    }
    return out;
}

} // namespace mapos::model
