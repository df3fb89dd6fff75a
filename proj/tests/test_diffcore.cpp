#include <doctest.h>

#include <cmath>

#include "w4mu/finite_diff.hpp"
#include "w4mu/graph.hpp"
#include "w4mu/params.hpp"
#include "w4mu/rng.hpp"

using namespace w4mu;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.data) v = lo + (hi - lo) * rng.uniform();
    return t;
}

double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

TEST_CASE("backward matches finite differences on a composite expression") {
    Rng rng(42);
    ParamSet p;
    p.name = "p";
    p.entries.emplace_back("w", random_tensor(rng, {3, 4}));
    p.entries.emplace_back("b", random_tensor(rng, {4}));
    Tensor x = random_tensor(rng, {5, 3});

    auto loss_of = [&](const ParamSet& q) {
        Graph g;
        auto xw = g.input(x);
        auto w = g.input(*q.find("w"));
        auto b = g.input(*q.find("b"));
        auto h = g.tanh(g.add_bias(g.matmul(xw, w), b));
        return g.value(g.mean(g.mul(h, h))).item();
    };

    Graph g;
    auto xw = g.input(x);
    auto w = g.param("w", *p.find("w"));
    auto b = g.param("b", *p.find("b"));
    auto h = g.tanh(g.add_bias(g.matmul(xw, w), b));
    GradMap grads = g.backward(g.mean(g.mul(h, h)));

    GradMap fd = finite_diff_grad(loss_of, p, 1e-6);
    std::vector<double> a = flatten_grads(p, grads);
    std::vector<double> e = flatten_grads(p, fd);
    CHECK(max_rel_err(a, e) < 1e-6);
}

TEST_CASE("cross entropy is invariant to per-row logit shifts") {
    Rng rng(7);
    Tensor logits = random_tensor(rng, {6, 4}, -3.0, 3.0);
    std::vector<int> labels = {0, 1, 2, 3, 1, 2};
    Graph g1;
    double v1 = g1.value(g1.cross_entropy(g1.input(logits), labels)).item();
    Tensor shifted = logits;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t c = 0; c < 4; ++c) shifted.data[i * 4 + c] += 100.0 * (i + 1);
    Graph g2;
    double v2 = g2.value(g2.cross_entropy(g2.input(shifted), labels)).item();
    CHECK(rel_err(v1, v2) < 1e-10);
}

TEST_CASE("cross entropy of uniform logits is ln C") {
    Graph g;
    auto logits = g.input(Tensor::zeros({3, 5}));
    double v = g.value(g.cross_entropy(logits, {0, 2, 4})).item();
    CHECK(std::abs(v - std::log(5.0)) < 1e-12);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Graph g;
    auto logits = g.input(Tensor::zeros({2, 3}));
    CHECK_THROWS_AS((void)g.cross_entropy(logits, {0, 3}), ValidationError);
}

TEST_CASE("bce_with_logits at zero logits is ln 2") {
    Graph g;
    auto logits = g.input(Tensor::zeros({4, 3}));
    double v = g.value(g.bce_with_logits(logits, {1, 0, 1})).item();
    CHECK(std::abs(v - std::log(2.0)) < 1e-12);
}

TEST_CASE("bce_with_logits_soft gradients flow to logits and target") {
    Rng rng(3);
    Tensor logits = random_tensor(rng, {2, 3}, -2.0, 2.0);
    Tensor target = random_tensor(rng, {3}, 0.1, 0.9);

    auto value_of = [&](const Tensor& lg, const Tensor& tg) {
        Graph g;
        return g.value(g.bce_with_logits_soft(g.input(lg), g.input(tg))).item();
    };

    Graph g;
    auto ln = g.param("logits", logits);
    auto tn = g.param("target", target);
    GradMap grads = g.backward(g.bce_with_logits_soft(ln, tn));

    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        Tensor lp = logits, lm = logits;
        lp.data[i] += 1e-6;
        lm.data[i] -= 1e-6;
        double fd = (value_of(lp, target) - value_of(lm, target)) / 2e-6;
        CHECK(rel_err(grads.at("logits").data[i], fd, 1e-6) < 1e-5);
    }
    for (std::size_t i = 0; i < target.data.size(); ++i) {
        Tensor tp = target, tm = target;
        tp.data[i] += 1e-6;
        tm.data[i] -= 1e-6;
        double fd = (value_of(logits, tp) - value_of(logits, tm)) / 2e-6;
        CHECK(rel_err(grads.at("target").data[i], fd, 1e-6) < 1e-5);
    }
}

TEST_CASE("clip01 gradient passes only inside the box") {
    Tensor x{{4}, {-0.5, 0.25, 0.75, 1.5}};
    Graph g;
    auto xn = g.param("x", x);
    GradMap grads = g.backward(g.sum(g.clip01(xn)));
    const Tensor& gx = grads.at("x");
    CHECK(gx.data[0] == 0.0);
    CHECK(gx.data[1] == 1.0);
    CHECK(gx.data[2] == 1.0);
    CHECK(gx.data[3] == 0.0);
}

TEST_CASE("l1 uses the sign subgradient with 0 at 0") {
    Tensor x{{3}, {-2.0, 0.0, 3.0}};
    Graph g;
    auto xn = g.param("x", x);
    GradMap grads = g.backward(g.l1(xn));
    CHECK(g.value(g.l1(g.input(x))).item() == 5.0);
    CHECK(grads.at("x").data[0] == -1.0);
    CHECK(grads.at("x").data[1] == 0.0);
    CHECK(grads.at("x").data[2] == 1.0);
}

TEST_CASE("matmul/concat/broadcast gradients match finite differences") {
    Rng rng(11);
    ParamSet p;
    p.name = "p";
    p.entries.emplace_back("a", random_tensor(rng, {3, 2}));
    p.entries.emplace_back("b", random_tensor(rng, {3, 2}));
    p.entries.emplace_back("v", random_tensor(rng, {4}));
    Tensor w = random_tensor(rng, {4, 3});

    auto build = [&](Graph& g, const ParamSet& q, bool trainable) {
        auto a = trainable ? g.param("a", *q.find("a")) : g.input(*q.find("a"));
        auto b = trainable ? g.param("b", *q.find("b")) : g.input(*q.find("b"));
        auto v = trainable ? g.param("v", *q.find("v")) : g.input(*q.find("v"));
        auto cat = g.concat_cols(a, b);                      // {3,4}
        auto bro = g.broadcast_rows(v, 3);                   // {3,4}
        auto prod = g.matmul(g.mul(cat, bro), g.input(w));   // {3,3}
        return g.mean(g.sigmoid(prod));
    };
    auto loss_of = [&](const ParamSet& q) {
        Graph g;
        return g.value(build(g, q, false)).item();
    };

    Graph g;
    GradMap grads = g.backward(build(g, p, true));
    GradMap fd = finite_diff_grad(loss_of, p, 1e-6);
    CHECK(max_rel_err(flatten_grads(p, grads), flatten_grads(p, fd)) < 1e-6);
}

TEST_CASE("backward is deterministic across repeated evaluation") {
    Rng rng(5);
    Tensor x = random_tensor(rng, {4, 3});
    auto run = [&]() {
        Graph g;
        auto xn = g.param("x", x);
        auto y = g.mean(g.mul(g.tanh(xn), g.relu(xn)));
        return g.backward(y);
    };
    GradMap a = run();
    GradMap b = run();
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(a.at("x").data[i] == b.at("x").data[i]);
}

TEST_CASE("param names must be unique within a graph") {
    Graph g;
    (void)g.param("w", Tensor::zeros({2}));
    CHECK_THROWS_AS((void)g.param("w", Tensor::zeros({2})), ContractError);
}

TEST_CASE("add/sub/mul broadcast a scalar operand") {
    Tensor x{{3}, {1.0, 2.0, 3.0}};
    Graph g;
    auto xn = g.param("x", x);
    auto two = g.input(Tensor::scalar(2.0));
    GradMap grads = g.backward(g.sum(g.mul(g.add(xn, two), two)));
    // d/dx sum(2*(x+2)) = 2
    for (double v : grads.at("x").data) CHECK(v == 2.0);
    Graph g2;
    auto a = g2.input(Tensor::scalar(3.0));
    auto b = g2.input(x);
    CHECK(g2.value(g2.sub(a, b)).data[1] == 1.0);
}

TEST_CASE("mismatched shapes are rejected") {
    Graph g;
    auto a = g.input(Tensor::zeros({2, 3}));
    auto b = g.input(Tensor::zeros({3, 2}));
    CHECK_THROWS_AS((void)g.add(a, b), DimensionError);
    CHECK_THROWS_AS((void)g.mse(a, b), DimensionError);
}

TEST_CASE("backward requires a scalar loss") {
    Graph g;
    auto a = g.param("a", Tensor::zeros({2, 2}));
    CHECK_THROWS_AS((void)g.backward(g.tanh(a)), ContractError);
}

TEST_CASE("ce_rows matches graph cross entropy") {
    Rng rng(9);
    Tensor logits = random_tensor(rng, {5, 3}, -2.0, 2.0);
    std::vector<int> labels = {0, 1, 2, 0, 1};
    std::vector<double> rows = ce_rows(logits, labels);
    double mean = 0.0;
    for (double v : rows) mean += v;
    mean /= rows.size();
    Graph g;
    double v = g.value(g.cross_entropy(g.input(logits), labels)).item();
    CHECK(rel_err(mean, v) < 1e-12);
}

TEST_CASE("rng streams are independent and deterministic") {
    Rng a = Rng::stream(1, "init", 0);
    Rng b = Rng::stream(1, "init", 0);
    Rng c = Rng::stream(1, "shuffle", 0);
    CHECK(a.next_u64() == b.next_u64());
    Rng a2 = Rng::stream(1, "init", 0);
    Rng c2 = Rng::stream(1, "shuffle", 0);
    CHECK(a2.next_u64() != c2.next_u64());
    CHECK(c.next_u64() == [&] { Rng d = Rng::stream(1, "shuffle", 0); return d.next_u64(); }());
}
