#pragma once

#include <cstdint>

#include "w4mu/data.hpp"
#include "w4mu/nets.hpp"

namespace w4mu::wm {

/// L-bit message with an optional relaxed logit form (used during message
/// selection; bits are then the hard threshold of sigmoid(z)).
struct WatermarkMessage {
    std::vector<int> bits;

    static WatermarkMessage random(std::size_t len, std::uint64_t seed);
    static WatermarkMessage from_logits(const std::vector<double>& z);

    std::size_t size() const { return bits.size(); }
    /// Bits as reals, the form fed to the encoder.
    std::vector<double> as_real() const;
};

struct WmTrainConfig {
    int epochs = 200;
    double lr = 0.5;
    std::size_t batch_size = 64;
    double rec_weight = 1.0;
    double dec_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Joint codec loss on one batch: rec_w * mse(x_w, x) + dec_w * bce(decode
/// logits, m) with x_w = encode(psi, x, m).
Graph::NodeId wm_loss_node(Graph& g, const nets::Bound& psi, const nets::Bound& phi,
                           Graph::NodeId x, Graph::NodeId msg, const std::vector<int>& bits,
                           double strength, double rec_weight, double dec_weight);

double wm_loss(const ParamSet& psi, const ParamSet& phi, const WatermarkMessage& m,
               const Tensor& batch, double strength, double rec_weight = 1.0,
               double dec_weight = 1.0);

struct WmTrainResult {
    ParamSet psi;
    ParamSet phi;
    std::vector<double> history;  // one loss per optimization step
};

/// Mini-batch gradient descent on the joint codec loss; per-epoch reshuffle
/// from a (seed, epoch) stream. Deterministic.
WmTrainResult train_watermark(const ParamSet& psi0, const ParamSet& phi0, const Tensor& train_x,
                              const WatermarkMessage& m, const WmTrainConfig& cfg,
                              double strength);

enum class Subset : unsigned { Forget = 1, Retain = 2, Test = 4 };
inline unsigned operator|(Subset a, Subset b) {
    return static_cast<unsigned>(a) | static_cast<unsigned>(b);
}
inline unsigned operator|(unsigned a, Subset b) { return a | static_cast<unsigned>(b); }

/// Copy of the bundle with the selected subsets replaced by their encoded
/// versions; labels and indices untouched. `msg` may be relaxed reals.
data::DatasetBundle embed_dataset(const ParamSet& psi, const data::DatasetBundle& splits,
                                  const std::vector<double>& msg, double strength,
                                  unsigned subsets);

double ber(const std::vector<int>& decoded, const WatermarkMessage& m);

/// Mean bit error rate of decode(encode(x)) over the rows of x.
double ber_over(const ParamSet& psi, const ParamSet& phi, const Tensor& x,
                const WatermarkMessage& m, double strength);

/// 10*log10(1/mse) in dB, capped at 99 (returned exactly when mse == 0).
double psnr(const Tensor& x, const Tensor& x_w);

}  // namespace w4mu::wm
