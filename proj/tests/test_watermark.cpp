#include <doctest.h>

#include <cmath>

#include "w4mu/rng.hpp"
#include "w4mu/watermark.hpp"

using namespace w4mu;

namespace {

Tensor random01(Rng& rng, std::size_t n, std::size_t d) {
    Tensor t = Tensor::zeros({n, d});
    for (double& v : t.data) v = rng.uniform();
    return t;
}

struct Fixture {
    nets::ArchSpec enc{nets::ArchKind::Encoder, 6, {5}, 6, 4, 0.1};
    nets::ArchSpec dec{nets::ArchKind::Decoder, 6, {5}, 4};
    ParamSet psi, phi;
    Tensor x;
    wm::WatermarkMessage m;
    Fixture() {
        psi = nets::init_params(enc, 1);
        phi = nets::init_params(dec, 2);
        Rng rng(3);
        x = random01(rng, 12, 6);
        m = wm::WatermarkMessage::random(4, 3);
    }
};

}  // namespace

TEST_CASE("message helpers") {
    wm::WatermarkMessage m = wm::WatermarkMessage::random(10, 1);
    CHECK(m.size() == 10);
    for (int b : m.bits) CHECK((b == 0 || b == 1));
    CHECK(wm::WatermarkMessage::random(10, 1).bits == m.bits);
    wm::WatermarkMessage f = wm::WatermarkMessage::from_logits({-1.0, 0.0, 2.0});
    CHECK(f.bits == std::vector<int>{0, 0, 1});
    CHECK(m.as_real().size() == 10);
}

TEST_CASE("wm_loss decomposes: zero strength and zero decoder give ln 2") {
    Fixture fx;
    for (auto& [name, t] : fx.phi.entries)
        for (double& v : t.data) v = 0.0;
    double v = wm::wm_loss(fx.psi, fx.phi, fx.m, fx.x, 0.0);
    CHECK(std::abs(v - std::log(2.0)) < 1e-12);
}

TEST_CASE("perfect decoder logits give near-zero loss") {
    // decoder with zero weights but biases at +-20 aligned with the message
    Fixture fx;
    nets::ArchSpec dec{nets::ArchKind::Decoder, 6, {}, 4};  // linear decoder
    ParamSet phi = nets::init_params(dec, 1);
    for (double& v : phi.find("w0")->data) v = 0.0;
    Tensor& b0 = *phi.find("b0");
    for (std::size_t i = 0; i < 4; ++i) b0.data[i] = fx.m.bits[i] ? 20.0 : -20.0;
    double v = wm::wm_loss(fx.psi, phi, fx.m, fx.x, 0.0);
    CHECK(v < 1e-8);
}

TEST_CASE("train_watermark trivial budgets") {
    Fixture fx;
    wm::WmTrainConfig cfg;
    cfg.epochs = 0;
    wm::WmTrainResult r0 = wm::train_watermark(fx.psi, fx.phi, fx.x, fx.m, cfg, 0.1);
    CHECK(flatten(r0.psi) == flatten(fx.psi));
    CHECK(flatten(r0.phi) == flatten(fx.phi));
    CHECK(r0.history.empty());

    cfg.epochs = 2;
    cfg.lr = 0.0;
    wm::WmTrainResult rz = wm::train_watermark(fx.psi, fx.phi, fx.x, fx.m, cfg, 0.1);
    CHECK(flatten(rz.psi) == flatten(fx.psi));
    CHECK(rz.history.size() == 2);  // 12 samples, batch 64 -> one step per epoch
    // batch shuffling reorders the row sum, so compare up to rounding
    CHECK(rz.history[0] == doctest::Approx(rz.history[1]).epsilon(1e-12));
}

TEST_CASE("train_watermark reduces the loss and is deterministic") {
    Fixture fx;
    wm::WmTrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr = 0.5;
    cfg.seed = 7;
    wm::WmTrainResult a = wm::train_watermark(fx.psi, fx.phi, fx.x, fx.m, cfg, 0.1);
    wm::WmTrainResult b = wm::train_watermark(fx.psi, fx.phi, fx.x, fx.m, cfg, 0.1);
    CHECK(flatten(a.psi) == flatten(b.psi));
    CHECK(a.history == b.history);
    for (double v : a.history) CHECK(std::isfinite(v));
    CHECK(a.history.back() <= a.history.front());
}

TEST_CASE("embed_dataset replaces only the selected subsets") {
    data::SynthConfig dcfg;
    dcfg.n_train = 16;
    dcfg.n_test = 4;
    dcfg.dim = 6;
    dcfg.n_classes = 2;
    data::DatasetBundle b = data::split_random(data::make_synthetic(dcfg, 9), 0.25, 9);
    Fixture fx;
    data::DatasetBundle e = wm::embed_dataset(fx.psi, b, fx.m.as_real(), 0.1,
                                              static_cast<unsigned>(wm::Subset::Forget));
    CHECK(e.labels == b.labels);
    CHECK(e.forget_idx == b.forget_idx);
    for (std::size_t i : b.retain_idx)
        for (std::size_t j = 0; j < dcfg.dim; ++j)
            CHECK(e.features.data[i * dcfg.dim + j] == b.features.data[i * dcfg.dim + j]);
    for (std::size_t i : b.test_idx)
        for (std::size_t j = 0; j < dcfg.dim; ++j)
            CHECK(e.features.data[i * dcfg.dim + j] == b.features.data[i * dcfg.dim + j]);
    // bounded move on embedded rows; input untouched
    for (std::size_t i : b.forget_idx)
        for (std::size_t j = 0; j < dcfg.dim; ++j)
            CHECK(std::abs(e.features.data[i * dcfg.dim + j] -
                           b.features.data[i * dcfg.dim + j]) <= 0.1 + 1e-12);

    data::DatasetBundle id = wm::embed_dataset(fx.psi, b, fx.m.as_real(), 0.0,
                                               wm::Subset::Forget | wm::Subset::Retain);
    CHECK(id.features.data == b.features.data);
}

TEST_CASE("ber counts Hamming fraction") {
    wm::WatermarkMessage m;
    m.bits = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
    CHECK(wm::ber(m.bits, m) == 0.0);
    std::vector<int> flipped;
    for (int b : m.bits) flipped.push_back(1 - b);
    CHECK(wm::ber(flipped, m) == 1.0);
    std::vector<int> one_off = m.bits;
    one_off[3] = 1 - one_off[3];
    CHECK(wm::ber(one_off, m) == doctest::Approx(0.1));
    CHECK_THROWS_AS((void)wm::ber({1, 0}, m), DimensionError);
}

TEST_CASE("psnr arithmetic and cap") {
    Tensor x{{2, 2}, {0.1, 0.2, 0.3, 0.4}};
    CHECK(wm::psnr(x, x) == 99.0);
    Tensor zero = Tensor::zeros({2, 2});
    Tensor one{{2, 2}, {1.0, 1.0, 1.0, 1.0}};  // mse 1
    CHECK(wm::psnr(zero, one) == doctest::Approx(0.0));
    Tensor z{{2, 2}, {0.2, 0.3, 0.4, 0.5}};  // mse 0.01
    CHECK(wm::psnr(x, z) == doctest::Approx(20.0));
}
