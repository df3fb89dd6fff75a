#include <doctest.h>

#include <cmath>

#include "w4mu/nets.hpp"
#include "w4mu/rng.hpp"

using namespace w4mu;

namespace {

Tensor random01(Rng& rng, std::size_t n, std::size_t d) {
    Tensor t = Tensor::zeros({n, d});
    for (double& v : t.data) v = rng.uniform();
    return t;
}

}  // namespace

TEST_CASE("init_params is deterministic and Glorot-bounded") {
    nets::ArchSpec arch{nets::ArchKind::Classifier, 8, {6}, 4};
    ParamSet a = nets::init_params(arch, 3);
    ParamSet b = nets::init_params(arch, 3);
    ParamSet c = nets::init_params(arch, 4);
    REQUIRE(a.entries.size() == 4);  // w0 b0 w1 b1
    CHECK(flatten(a) == flatten(b));
    CHECK(flatten(a) != flatten(c));
    double bound0 = std::sqrt(6.0 / (8 + 6));
    for (double v : a.find("w0")->data) CHECK(std::abs(v) <= bound0);
    for (double v : a.find("b0")->data) CHECK(v == 0.0);
}

TEST_CASE("classifier output shape and decode_bits threshold") {
    nets::ArchSpec arch{nets::ArchKind::Classifier, 5, {4}, 3};
    ParamSet theta = nets::init_params(arch, 1);
    Rng rng(2);
    Tensor x = random01(rng, 7, 5);
    Tensor logits = nets::classify(theta, x);
    CHECK(logits.shape == std::vector<std::size_t>{7, 3});

    Tensor z{{1, 3}, {-0.5, 0.0, 0.5}};
    auto bits = nets::decode_bits(z);
    CHECK(bits[0] == std::vector<int>{0, 0, 1});  // tie at 0 -> 0
}

TEST_CASE("encoder residual is bounded by strength") {
    nets::ArchSpec arch{nets::ArchKind::Encoder, 6, {5}, 6, 4, 0.1};
    ParamSet psi = nets::init_params(arch, 5);
    Rng rng(8);
    Tensor x = random01(rng, 9, 6);
    std::vector<double> msg = {1.0, 0.0, 1.0, 1.0};
    Tensor xw = nets::encode(psi, x, msg, 0.1);
    REQUIRE(xw.shape == x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        CHECK(std::abs(xw.data[i] - x.data[i]) <= 0.1 + 1e-12);
        CHECK(xw.data[i] >= 0.0);
        CHECK(xw.data[i] <= 1.0);
    }
}

TEST_CASE("zero-strength encoder is the identity") {
    nets::ArchSpec arch{nets::ArchKind::Encoder, 6, {5}, 6, 4, 0.0};
    ParamSet psi = nets::init_params(arch, 5);
    Rng rng(8);
    Tensor x = random01(rng, 4, 6);
    Tensor xw = nets::encode(psi, x, {1.0, 1.0, 0.0, 0.0}, 0.0);
    CHECK(xw.data == x.data);
}

TEST_CASE("decoder maps watermarked input to message logits") {
    nets::ArchSpec arch{nets::ArchKind::Decoder, 6, {5}, 4};
    ParamSet phi = nets::init_params(arch, 6);
    Rng rng(1);
    Tensor xw = random01(rng, 3, 6);
    Tensor logits = nets::decode_logits(phi, xw);
    CHECK(logits.shape == std::vector<std::size_t>{3, 4});
}

TEST_CASE("arch validation rejects inconsistent specs") {
    nets::ArchSpec bad{nets::ArchKind::Classifier, 0, {4}, 3};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    nets::ArchSpec enc{nets::ArchKind::Encoder, 6, {5}, 6, 0, 0.1};  // missing message len
    CHECK_THROWS_AS(enc.validate(), ValidationError);
}

TEST_CASE("graph and forward-only paths agree") {
    nets::ArchSpec arch{nets::ArchKind::Classifier, 5, {4}, 3};
    ParamSet theta = nets::init_params(arch, 9);
    Rng rng(4);
    Tensor x = random01(rng, 6, 5);
    Tensor direct = nets::classify(theta, x);
    Graph g;
    nets::Bound bound = nets::bind_frozen(g, theta);
    Tensor via_graph = g.value(nets::classify_node(g, bound, g.input(x)));
    CHECK(direct.data == via_graph.data);
}
