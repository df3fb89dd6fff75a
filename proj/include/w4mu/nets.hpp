#pragma once

#include <cstdint>
#include <map>

#include "w4mu/params.hpp"

namespace w4mu::nets {

enum class ArchKind { Classifier, Encoder, Decoder };

/// Desk-scale architecture description. The classifier is a tanh-hidden MLP;
/// the watermark codec is a pair of MLPs: the encoder maps
/// concat(x, message) to a bounded additive residual, the decoder maps a
/// (possibly watermarked) sample to message logits.
struct ArchSpec {
    ArchKind kind = ArchKind::Classifier;
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 0;
    std::size_t message_len = 0;  // encoder only: width of the message input
    double strength = 0.1;        // encoder only: residual bound s

    void validate() const;
    std::size_t first_layer_inputs() const;
};

/// Glorot-uniform weights from a per-(seed, layer) stream; zero biases.
ParamSet init_params(const ArchSpec& arch, std::uint64_t seed);

std::size_t layer_count(const ParamSet& p);

/// Leaf-id handle for a ParamSet bound into a graph.
struct Bound {
    std::map<std::string, Graph::NodeId> ids;
    Graph::NodeId at(const std::string& key) const;
};

Bound bind_trainable(Graph& g, const ParamSet& p, const std::string& prefix = "");
Bound bind_frozen(Graph& g, const ParamSet& p);

// --- graph builders -------------------------------------------------------

/// Classifier forward: tanh hidden layers, linear output logits {n,C}.
Graph::NodeId classify_node(Graph& g, const Bound& theta, Graph::NodeId x);

/// Encoder forward: x_w = clip01(x + s * h(concat(x, broadcast(m)))) where h
/// has tanh hidden layers and a tanh output, so the residual lies in [-s,s].
/// `msg` is a rank-1 node of length L (hard bits or a relaxed sigmoid).
Graph::NodeId encode_node(Graph& g, const Bound& psi, Graph::NodeId x, Graph::NodeId msg,
                          double strength);

/// Decoder forward: tanh hidden layers, linear message logits {n,L}.
Graph::NodeId decode_node(Graph& g, const Bound& phi, Graph::NodeId x_w);

// --- forward-only conveniences -------------------------------------------

Tensor classify(const ParamSet& theta, const Tensor& x);
Tensor encode(const ParamSet& psi, const Tensor& x, const std::vector<double>& msg,
              double strength);
Tensor decode_logits(const ParamSet& phi, const Tensor& x_w);

/// Hard decision per row: bit = 1 iff sigmoid(logit) > 0.5 (ties -> 0).
std::vector<std::vector<int>> decode_bits(const Tensor& logits);

}  // namespace w4mu::nets
