#include "w4mu/watermark.hpp"

#include <cmath>
#include <numeric>

#include "w4mu/errors.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::wm {

WatermarkMessage WatermarkMessage::random(std::size_t len, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "message");
    WatermarkMessage m;
    m.bits.resize(len);
    for (auto& b : m.bits) b = rng.bit();
    return m;
}

WatermarkMessage WatermarkMessage::from_logits(const std::vector<double>& z) {
    WatermarkMessage m;
    m.bits.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) m.bits[i] = z[i] > 0.0 ? 1 : 0;
    return m;
}

std::vector<double> WatermarkMessage::as_real() const {
    std::vector<double> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = static_cast<double>(bits[i]);
    return out;
}

void WmTrainConfig::validate() const {
    if (epochs < 0) throw ValidationError("wm config: epochs must be >= 0");
    if (lr < 0.0) throw ValidationError("wm config: lr must be >= 0");
    if (batch_size < 1) throw ValidationError("wm config: batch_size must be >= 1");
}

Graph::NodeId wm_loss_node(Graph& g, const nets::Bound& psi, const nets::Bound& phi,
                           Graph::NodeId x, Graph::NodeId msg, const std::vector<int>& bits,
                           double strength, double rec_weight, double dec_weight) {
    Graph::NodeId x_w = nets::encode_node(g, psi, x, msg, strength);
    Graph::NodeId rec = g.mse(x_w, x);
    Graph::NodeId dec = g.bce_with_logits(nets::decode_node(g, phi, x_w), bits);
    return g.add(g.scale(rec, rec_weight), g.scale(dec, dec_weight));
}

double wm_loss(const ParamSet& psi, const ParamSet& phi, const WatermarkMessage& m,
               const Tensor& batch, double strength, double rec_weight, double dec_weight) {
    if (batch.rows() == 0) throw ValidationError("wm_loss: empty batch");
    Graph g;
    nets::Bound bp = nets::bind_frozen(g, psi);
    nets::Bound bf = nets::bind_frozen(g, phi);
    Graph::NodeId x = g.input(batch);
    Graph::NodeId msg = g.input(Tensor({m.size()}, m.as_real()));
    return g.value(wm_loss_node(g, bp, bf, x, msg, m.bits, strength, rec_weight, dec_weight))
        .item();
}

WmTrainResult train_watermark(const ParamSet& psi0, const ParamSet& phi0, const Tensor& train_x,
                              const WatermarkMessage& m, const WmTrainConfig& cfg,
                              double strength) {
    cfg.validate();
    WmTrainResult r;
    r.psi = psi0;
    r.phi = phi0;
    std::size_t n = train_x.rows();
    if (n == 0) throw ValidationError("train_watermark: empty training data");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::stream(cfg.seed, "wm-shuffle", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
            std::size_t stop = std::min(start + cfg.batch_size, n);
            std::vector<std::size_t> batch_idx(order.begin() + start, order.begin() + stop);
            Tensor batch = gather_rows(train_x, batch_idx);

            Graph g;
            nets::Bound bp = nets::bind_trainable(g, r.psi, "psi.");
            nets::Bound bf = nets::bind_trainable(g, r.phi, "phi.");
            Graph::NodeId x = g.input(batch);
            Graph::NodeId msg = g.input(Tensor({m.size()}, m.as_real()));
            Graph::NodeId loss = wm_loss_node(g, bp, bf, x, msg, m.bits, strength, cfg.rec_weight,
                                              cfg.dec_weight);
            double lv = g.value(loss).item();
            if (!std::isfinite(lv))
                throw NumericError("train_watermark: non-finite loss at step " +
                                   std::to_string(step));
            GradMap grads = g.backward(loss);
            axpy(r.psi, -cfg.lr, strip_prefix(grads, "psi."));
            axpy(r.phi, -cfg.lr, strip_prefix(grads, "phi."));
            r.history.push_back(lv);
        }
    }
    return r;
}

data::DatasetBundle embed_dataset(const ParamSet& psi, const data::DatasetBundle& splits,
                                  const std::vector<double>& msg, double strength,
                                  unsigned subsets) {
    data::DatasetBundle out = splits;
    auto embed_rows = [&](const std::vector<std::size_t>& idx) {
        if (idx.empty()) return;
        Tensor x = gather_rows(splits.features, idx);
        Tensor x_w = nets::encode(psi, x, msg, strength);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < x_w.shape[1]; ++j) out.features(idx[i], j) = x_w(i, j);
    };
    if (subsets & static_cast<unsigned>(Subset::Forget)) embed_rows(splits.forget_idx);
    if (subsets & static_cast<unsigned>(Subset::Retain)) embed_rows(splits.retain_idx);
    if (subsets & static_cast<unsigned>(Subset::Test)) embed_rows(splits.test_idx);
    return out;
}

double ber(const std::vector<int>& decoded, const WatermarkMessage& m) {
    if (decoded.size() != m.size())
        throw DimensionError("ber: length mismatch " + std::to_string(decoded.size()) + " vs " +
                             std::to_string(m.size()));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (decoded[i] != m.bits[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(m.size());
}

double ber_over(const ParamSet& psi, const ParamSet& phi, const Tensor& x,
                const WatermarkMessage& m, double strength) {
    Tensor x_w = nets::encode(psi, x, m.as_real(), strength);
    auto bits = nets::decode_bits(nets::decode_logits(phi, x_w));
    double total = 0.0;
    for (const auto& row : bits) total += ber(row, m);
    return total / static_cast<double>(bits.size());
}

double psnr(const Tensor& x, const Tensor& x_w) {
    if (!x.same_shape(x_w))
        throw DimensionError("psnr: shapes " + x.shape_str() + " vs " + x_w.shape_str());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - x_w[i];
        s += d * d;
    }
    double mse = s / static_cast<double>(x.size());
    if (mse == 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace w4mu::wm
