#include <cmath>
#include <numeric>

#include "doctest.h"
#include "error.hpp"
#include "layers.hpp"
#include "rng.hpp"
#include "tensor.hpp"

using namespace mapos;
using namespace mapos::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

// deterministic probe coefficients so L = sum(c .* y) has nontrivial gradients
Tensor probe_coeffs(const Tensor& like) {
    Tensor c(like.shape);
    for (std::size_t i = 0; i < c.size(); ++i)
        c.data[i] = std::sin(0.7 * static_cast<double>(i) + 0.3);
    return c;
}

double weighted_sum(const Tensor& y, const Tensor& c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * c.data[i];
    return acc;
}

} // namespace

TEST_CASE("dense identity and bias broadcast") {
    Tensor w({3, 3}), b({3});
    for (int i = 0; i < 3; ++i) w(i, i) = 1.0;
    Rng r(1);
    Tensor x = random_tensor({4, 3}, r);
    Tensor y = dense_forward(x, w, b);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));

    Tensor zero({2, 3});
    b[0] = 1.5;
    b[1] = -2.0;
    b[2] = 0.25;
    Tensor yb = dense_forward(zero, w, b);
    for (std::size_t i = 0; i < yb.rows(); ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(yb(i, j) == doctest::Approx(b[j]));
}

TEST_CASE("dense shape mismatch names both shapes") {
    Tensor x({2, 3}), w({4, 2}), b({2});
    CHECK_THROWS_WITH_AS(dense_forward(x, w, b), doctest::Contains("[2x3]"), Error);
}

TEST_CASE("dense gradients match finite differences at linear precision") {
    Rng r(2);
    ParamStore store;
    Tensor& w = store.add("w", {3, 2});
    Tensor& b = store.add("b", {2});
    w = random_tensor({3, 2}, r, 0.7);
    b = random_tensor({2}, r, 0.3);
    std::vector<double> x(4 * 3);
    for (auto& v : x) v = r.normal();
    std::vector<double> xg(x.size(), 0.0);

    auto loss = [&](bool grads) {
        Tensor xt({4, 3});
        xt.data = x;
        DenseCache cache;
        Tensor y = dense_forward(xt, store.value("w"), store.value("b"), &cache);
        Tensor c = probe_coeffs(y);
        if (grads) {
            Tensor dx = dense_backward(c, cache, store.value("w"), store.grad("w"),
                                       store.grad("b"));
            xg = dx.data;
        }
        return weighted_sum(y, c);
    };
    CHECK(gradient_check(loss, store, &x, &xg) < 1e-8);
}

TEST_CASE("lstm cell zero-parameter identities") {
    const std::size_t in = 2, hid = 3;
    Tensor wx({in, 4 * hid}), wh({hid, 4 * hid}), b({4 * hid});
    LstmWeights w{&wx, &wh, &b};
    Tensor x({in}), h0({hid}), c0({hid});
    Tensor h, c;
    lstm_cell_forward(x, h0, c0, w, h, c);
    for (std::size_t j = 0; j < hid; ++j) {
        CHECK(h[j] == doctest::Approx(0.0));
        CHECK(c[j] == doctest::Approx(0.0));
    }

    c0[0] = 0.8;
    c0[1] = -1.4;
    c0[2] = 2.0;
    lstm_cell_forward(x, h0, c0, w, h, c);
    for (std::size_t j = 0; j < hid; ++j) {
        CHECK(c[j] == doctest::Approx(0.5 * c0[j]));
        CHECK(h[j] == doctest::Approx(0.5 * std::tanh(0.5 * c0[j])));
    }
}

TEST_CASE("lstm cell gradients match finite differences") {
    const std::size_t in = 3, hid = 4;
    Rng r(3);
    ParamStore store;
    store.add("wx", {in, 4 * hid});
    store.add("wh", {hid, 4 * hid});
    store.add("b", {4 * hid});
    init_xavier(store.value("wx"), in, 4 * hid, r);
    init_recurrent(store.value("wh"), hid, r);
    for (auto& v : store.value("b").data) v = r.normal(0.0, 0.2);

    std::vector<double> x(in + 2 * hid); // x, h_prev, c_prev all checked as inputs
    for (auto& v : x) v = r.normal(0.0, 0.8);
    std::vector<double> xg(x.size(), 0.0);

    auto loss = [&](bool grads) {
        Tensor xt({in}), hp({hid}), cp({hid});
        for (std::size_t i = 0; i < in; ++i) xt[i] = x[i];
        for (std::size_t i = 0; i < hid; ++i) hp[i] = x[in + i];
        for (std::size_t i = 0; i < hid; ++i) cp[i] = x[in + hid + i];
        LstmWeights w{&store.value("wx"), &store.value("wh"), &store.value("b")};
        LstmStepCache cache;
        Tensor h, c;
        lstm_cell_forward(xt, hp, cp, w, h, c, &cache);
        Tensor ch = probe_coeffs(h);
        Tensor cc = probe_coeffs(c);
        if (grads) {
            LstmGrads g{&store.grad("wx"), &store.grad("wh"), &store.grad("b")};
            Tensor dx, dhp, dcp;
            lstm_cell_backward(ch, cc, cache, w, g, dx, dhp, dcp);
            for (std::size_t i = 0; i < in; ++i) xg[i] = dx[i];
            for (std::size_t i = 0; i < hid; ++i) xg[in + i] = dhp[i];
            for (std::size_t i = 0; i < hid; ++i) xg[in + hid + i] = dcp[i];
        }
        return weighted_sum(h, ch) + weighted_sum(c, cc);
    };
    CHECK(gradient_check(loss, store, &x, &xg) < 1e-4);
}

TEST_CASE("lstm sequence of one step equals a single cell call") {
    const std::size_t in = 2, hid = 3;
    Rng r(4);
    Tensor wx = random_tensor({in, 4 * hid}, r, 0.4);
    Tensor wh = random_tensor({hid, 4 * hid}, r, 0.4);
    Tensor b = random_tensor({4 * hid}, r, 0.2);
    LstmWeights w{&wx, &wh, &b};

    Tensor xs = random_tensor({1, in}, r);
    Tensor hs = lstm_sequence_forward(xs, w, hid, Direction::Forward);

    Tensor x({in}), h0({hid}), c0({hid}), h, c;
    for (std::size_t j = 0; j < in; ++j) x[j] = xs(0, j);
    lstm_cell_forward(x, h0, c0, w, h, c);
    for (std::size_t j = 0; j < hid; ++j) CHECK(hs(0, j) == doctest::Approx(h[j]));
}

TEST_CASE("backward direction equals reverse-forward-reverse") {
    const std::size_t in = 2, hid = 3, steps = 7;
    Rng r(5);
    Tensor wx = random_tensor({in, 4 * hid}, r, 0.4);
    Tensor wh = random_tensor({hid, 4 * hid}, r, 0.4);
    Tensor b = random_tensor({4 * hid}, r, 0.2);
    LstmWeights w{&wx, &wh, &b};

    Tensor xs = random_tensor({steps, in}, r);
    Tensor rev({steps, in});
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t j = 0; j < in; ++j) rev(t, j) = xs(steps - 1 - t, j);

    Tensor back = lstm_sequence_forward(xs, w, hid, Direction::Backward);
    Tensor fwd_on_rev = lstm_sequence_forward(rev, w, hid, Direction::Forward);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t j = 0; j < hid; ++j)
            CHECK(back(t, j) == fwd_on_rev(steps - 1 - t, j));

    // palindromic input: backward output is the reversed forward output
    Tensor pal({4, in});
    for (std::size_t j = 0; j < in; ++j) {
        pal(0, j) = pal(3, j) = 0.4 + 0.1 * j;
        pal(1, j) = pal(2, j) = -0.2 + 0.3 * j;
    }
    Tensor pf = lstm_sequence_forward(pal, w, hid, Direction::Forward);
    Tensor pb = lstm_sequence_forward(pal, w, hid, Direction::Backward);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t j = 0; j < hid; ++j) CHECK(pb(t, j) == pf(3 - t, j));
}

TEST_CASE("lstm 5-step unroll gradients match finite differences") {
    const std::size_t in = 2, hid = 3, steps = 5;
    Rng r(6);
    ParamStore store;
    store.add("wx", {in, 4 * hid});
    store.add("wh", {hid, 4 * hid});
    store.add("b", {4 * hid});
    init_xavier(store.value("wx"), in, 4 * hid, r);
    init_recurrent(store.value("wh"), hid, r);

    std::vector<double> x(steps * in);
    for (auto& v : x) v = r.normal(0.0, 0.8);
    std::vector<double> xg(x.size(), 0.0);

    auto loss = [&](bool grads) {
        Tensor xs({steps, in});
        xs.data = x;
        LstmWeights w{&store.value("wx"), &store.value("wh"), &store.value("b")};
        LstmSeqCache cache;
        Tensor hs = lstm_sequence_forward(xs, w, hid, Direction::Forward, &cache);
        Tensor c = probe_coeffs(hs);
        if (grads) {
            LstmGrads g{&store.grad("wx"), &store.grad("wh"), &store.grad("b")};
            Tensor dxs = lstm_sequence_backward(c, cache, w, g);
            xg = dxs.data;
        }
        return weighted_sum(hs, c);
    };
    CHECK(gradient_check(loss, store, &x, &xg) < 1e-4);
}

TEST_CASE("bilstm output width and tied-parameter symmetry") {
    const std::size_t in = 2, hid = 1, steps = 5;
    Rng r(7);
    Tensor wx = random_tensor({in, 4 * hid}, r, 0.5);
    Tensor wh = random_tensor({hid, 4 * hid}, r, 0.5);
    Tensor b = random_tensor({4 * hid}, r, 0.2);
    LstmWeights w{&wx, &wh, &b};

    Tensor xs({steps, in});
    for (std::size_t t = 0; t < steps; ++t) {
        xs(t, 0) = 0.3;
        xs(t, 1) = -0.6;
    }
    Tensor y = bilstm_forward(xs, w, w, hid);
    CHECK(y.cols() == 2 * hid);
    // with tied parameters on constant input the two halves mirror each other:
    // forward state after k steps == backward state k steps from the end
    for (std::size_t t = 0; t < steps; ++t)
        CHECK(y(t, 0) == doctest::Approx(y(steps - 1 - t, 1)));
    // and the middle position (odd length) carries identical halves
    CHECK(y(steps / 2, 0) == doctest::Approx(y(steps / 2, 1)));
}

TEST_CASE("bilstm end-to-end gradients match finite differences") {
    const std::size_t in = 2, hid = 2, steps = 4;
    Rng r(8);
    ParamStore store;
    for (const char* side : {"f", "b"}) {
        store.add(std::string("wx") + side, {in, 4 * hid});
        store.add(std::string("wh") + side, {hid, 4 * hid});
        store.add(std::string("b") + side, {4 * hid});
        init_xavier(store.value(std::string("wx") + side), in, 4 * hid, r);
        init_recurrent(store.value(std::string("wh") + side), hid, r);
    }
    std::vector<double> x(steps * in);
    for (auto& v : x) v = r.normal(0.0, 0.7);
    std::vector<double> xg(x.size(), 0.0);

    auto loss = [&](bool grads) {
        Tensor xs({steps, in});
        xs.data = x;
        LstmWeights wf{&store.value("wxf"), &store.value("whf"), &store.value("bf")};
        LstmWeights wb{&store.value("wxb"), &store.value("whb"), &store.value("bb")};
        BilstmCache cache;
        Tensor y = bilstm_forward(xs, wf, wb, hid, &cache);
        Tensor c = probe_coeffs(y);
        if (grads) {
            LstmGrads gf{&store.grad("wxf"), &store.grad("whf"), &store.grad("bf")};
            LstmGrads gb{&store.grad("wxb"), &store.grad("whb"), &store.grad("bb")};
            Tensor dxs = bilstm_backward(c, cache, wf, wb, gf, gb);
            xg = dxs.data;
        }
        return weighted_sum(y, c);
    };
    CHECK(gradient_check(loss, store, &x, &xg) < 1e-4);
}

TEST_CASE("single-token attention reduces to V Wo") {
    const std::size_t d = 4;
    Rng r(9);
    Tensor wq = random_tensor({d, d}, r, 0.5);
    Tensor wk = random_tensor({d, d}, r, 0.5);
    Tensor wv = random_tensor({d, d}, r, 0.5);
    Tensor wo = random_tensor({d, d}, r, 0.5);
    Tensor x = random_tensor({1, d}, r);
    Tensor y = mha_forward(x, wq, wk, wv, wo, 2);
    Tensor expect = matmul(matmul(x, wv), wo);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));
}

TEST_CASE("zero queries give uniform attention over values") {
    const std::size_t d = 4, t_len = 6;
    Rng r(10);
    Tensor wq({d, d}); // zero
    Tensor wk = random_tensor({d, d}, r, 0.5);
    Tensor wv = random_tensor({d, d}, r, 0.5);
    Tensor wo({d, d});
    for (std::size_t i = 0; i < d; ++i) wo(i, i) = 1.0; // identity output projection
    Tensor x = random_tensor({t_len, d}, r);

    MhaCache cache;
    Tensor y = mha_forward(x, wq, wk, wv, wo, 2, &cache);
    Tensor v = matmul(x, wv);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) mean += v(t, j);
        mean /= static_cast<double>(t_len);
        for (std::size_t t = 0; t < t_len; ++t) CHECK(y(t, j) == doctest::Approx(mean));
    }
}

TEST_CASE("attention rows sum to one and resist constant logit shifts") {
    Rng r(11);
    Tensor s = random_tensor({5, 7}, r, 3.0);
    Tensor shifted = s;
    for (std::size_t i = 0; i < shifted.rows(); ++i)
        for (std::size_t j = 0; j < shifted.cols(); ++j) shifted(i, j) += 123.456;
    softmax_rows(s);
    softmax_rows(shifted);
    for (std::size_t i = 0; i < s.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols(); ++j) {
            sum += s(i, j);
            CHECK(std::abs(s(i, j) - shifted(i, j)) < 1e-12);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("attention head-count divisibility is enforced") {
    Tensor w({6, 6}), x({3, 6});
    CHECK_THROWS_WITH_AS(mha_forward(x, w, w, w, w, 4), doctest::Contains("divisible"),
                         Error);
}

TEST_CASE("attention gradients match finite differences on all projections") {
    const std::size_t d = 4, t_len = 5;
    Rng r(12);
    ParamStore store;
    for (const char* n : {"wq", "wk", "wv", "wo"}) {
        store.add(n, {d, d});
        init_xavier(store.value(n), d, d, r);
    }
    std::vector<double> x(t_len * d);
    for (auto& v : x) v = r.normal(0.0, 0.9);
    std::vector<double> xg(x.size(), 0.0);

    auto loss = [&](bool grads) {
        Tensor xt({t_len, d});
        xt.data = x;
        MhaCache cache;
        Tensor y = mha_forward(xt, store.value("wq"), store.value("wk"), store.value("wv"),
                               store.value("wo"), 2, &cache);
        Tensor c = probe_coeffs(y);
        if (grads) {
            Tensor dx = mha_backward(c, cache, store.value("wq"), store.value("wk"),
                                     store.value("wv"), store.value("wo"), 2,
                                     store.grad("wq"), store.grad("wk"), store.grad("wv"),
                                     store.grad("wo"));
            xg = dx.data;
        }
        return weighted_sum(y, c);
    };
    CHECK(gradient_check(loss, store, &x, &xg) < 1e-4);
}

TEST_CASE("dropout identity modes and survivor statistics") {
    Rng r(13);
    Tensor x = random_tensor({1000}, r);

    Rng d1(1);
    Tensor y0 = dropout_forward(x, 0.0, true, d1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y0.data[i] == x.data[i]);
    Tensor ye = dropout_forward(x, 0.9, false, d1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(ye.data[i] == x.data[i]);

    Tensor big({1000000});
    big.fill(1.0);
    Rng d2(2);
    Tensor yt = dropout_forward(big, 0.5, true, d2);
    std::size_t survivors = 0;
    double mean = 0.0;
    for (double v : yt.data) {
        if (v != 0.0) ++survivors;
        mean += v;
    }
    mean /= static_cast<double>(big.size());
    CHECK(std::abs(static_cast<double>(survivors) / 1e6 - 0.5) < 0.01);
    CHECK(std::abs(mean - 1.0) < 0.01);
}

TEST_CASE("dropout backward routes gradients through the surviving mask") {
    Rng r(14);
    Tensor x = random_tensor({64}, r);
    Rng d(3);
    DropoutCache cache;
    dropout_forward(x, 0.4, true, d, &cache);
    Tensor dy({64});
    dy.fill(1.0);
    Tensor dx = dropout_backward(dy, cache);
    for (std::size_t i = 0; i < dx.size(); ++i)
        CHECK(dx.data[i] == doctest::Approx(cache.scale[i]));
}

TEST_CASE("adam first step approximates -lr * sign(gradient)") {
    ParamStore store;
    Tensor& p = store.add("p", {4});
    p.fill(1.0);
    Tensor& g = store.grad("p");
    g[0] = 1.0;
    g[1] = -1.0;
    g[2] = 1.0;
    g[3] = -1.0;
    adam_step(store, 0.001);
    CHECK(std::abs(p[0] - (1.0 - 0.001)) < 1e-6);
    CHECK(std::abs(p[1] - (1.0 + 0.001)) < 1e-6);
    CHECK(store.step_count() == 1);
}

TEST_CASE("adam leaves parameters alone for zero gradients") {
    ParamStore store;
    Tensor& p = store.add("p", {3});
    p[0] = 0.5;
    p[1] = -0.25;
    p[2] = 2.0;
    adam_step(store, 0.01);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(-0.25));
    CHECK(p[2] == doctest::Approx(2.0));
}

TEST_CASE("adam drives a quadratic toward its minimum") {
    ParamStore store;
    Tensor& p = store.add("theta", {1});
    p[0] = 1.0;
    for (int step = 0; step < 200; ++step) {
        store.zero_grad();
        store.grad("theta")[0] = 2.0 * p[0]; // d/dtheta theta^2
        adam_step(store, 0.05);
    }
    CHECK(std::abs(p[0]) < 0.05);
}

TEST_CASE("gradient_check flags a deliberately corrupted gradient") {
    Rng r(15);
    ParamStore store;
    Tensor& w = store.add("w", {3});
    w = random_tensor({3}, r);

    auto loss = [&](bool grads) {
        const Tensor& wt = store.value("w");
        double l = 0.0;
        for (std::size_t i = 0; i < 3; ++i) l += 0.5 * wt[i] * wt[i];
        if (grads)
            for (std::size_t i = 0; i < 3; ++i) store.grad("w")[i] = 2.0 * wt[i]; // x2 fault
        return l;
    };
    double err = gradient_check(loss, store, nullptr, nullptr);
    CHECK(err > 0.45);
    CHECK(err < 0.55);

    auto honest = [&](bool grads) {
        const Tensor& wt = store.value("w");
        double l = 0.0;
        for (std::size_t i = 0; i < 3; ++i) l += 0.5 * wt[i] * wt[i];
        if (grads)
            for (std::size_t i = 0; i < 3; ++i) store.grad("w")[i] = wt[i];
        return l;
    };
    CHECK(gradient_check(honest, store, nullptr, nullptr) < 1e-8);
}
