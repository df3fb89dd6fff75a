#include "w4mu/nets.hpp"

#include <cmath>

#include "w4mu/errors.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::nets {

void ArchSpec::validate() const {
    if (input_dim == 0 || output_dim == 0)
        throw ValidationError("arch: dimensions must be positive");
    for (std::size_t h : hidden)
        if (h == 0) throw ValidationError("arch: hidden widths must be positive");
    if (kind == ArchKind::Encoder) {
        if (output_dim != input_dim)
            throw ValidationError("arch: encoder output_dim must equal input_dim");
        if (message_len == 0) throw ValidationError("arch: encoder needs message_len > 0");
        if (strength < 0.0) throw ValidationError("arch: strength must be >= 0");
    }
}

std::size_t ArchSpec::first_layer_inputs() const {
    return kind == ArchKind::Encoder ? input_dim + message_len : input_dim;
}

ParamSet init_params(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    ParamSet p;
    switch (arch.kind) {
        case ArchKind::Classifier: p.name = "theta"; break;
        case ArchKind::Encoder: p.name = "psi"; break;
        case ArchKind::Decoder: p.name = "phi"; break;
    }
    std::vector<std::size_t> dims;
    dims.push_back(arch.first_layer_inputs());
    for (std::size_t h : arch.hidden) dims.push_back(h);
    dims.push_back(arch.output_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        std::size_t fan_in = dims[l], fan_out = dims[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Rng rng = Rng::stream(seed, "init", l);
        Tensor w({fan_in, fan_out});
        for (auto& v : w.data) v = rng.uniform(-limit, limit);
        p.entries.emplace_back("w" + std::to_string(l), std::move(w));
        p.entries.emplace_back("b" + std::to_string(l), Tensor::zeros({fan_out}));
    }
    return p;
}

std::size_t layer_count(const ParamSet& p) { return p.entries.size() / 2; }

Graph::NodeId Bound::at(const std::string& key) const {
    auto it = ids.find(key);
    if (it == ids.end()) throw ContractError("bound params: missing entry '" + key + "'");
    return it->second;
}

Bound bind_trainable(Graph& g, const ParamSet& p, const std::string& prefix) {
    Bound b;
    for (const auto& [k, t] : p.entries) b.ids[k] = g.param(prefix + k, t);
    return b;
}

Bound bind_frozen(Graph& g, const ParamSet& p) {
    Bound b;
    for (const auto& [k, t] : p.entries) b.ids[k] = g.input(t);
    return b;
}

// Shared MLP body: tanh on all but the last layer; tanh_output controls the
// final activation.
static Graph::NodeId mlp_forward(Graph& g, const Bound& p, Graph::NodeId x, std::size_t layers,
                                 bool tanh_output) {
    Graph::NodeId h = x;
    for (std::size_t l = 0; l < layers; ++l) {
        h = g.add_bias(g.matmul(h, p.at("w" + std::to_string(l))), p.at("b" + std::to_string(l)));
        if (l + 1 < layers || tanh_output) h = g.tanh(h);
    }
    return h;
}

Graph::NodeId classify_node(Graph& g, const Bound& theta, Graph::NodeId x) {
    return mlp_forward(g, theta, x, theta.ids.size() / 2, false);
}

Graph::NodeId encode_node(Graph& g, const Bound& psi, Graph::NodeId x, Graph::NodeId msg,
                          double strength) {
    std::size_t n = g.value(x).shape[0];
    Graph::NodeId m_rows = g.broadcast_rows(msg, n);
    Graph::NodeId inp = g.concat_cols(x, m_rows);
    Graph::NodeId residual = mlp_forward(g, psi, inp, psi.ids.size() / 2, true);
    return g.clip01(g.add(x, g.scale(residual, strength)));
}

Graph::NodeId decode_node(Graph& g, const Bound& phi, Graph::NodeId x_w) {
    return mlp_forward(g, phi, x_w, phi.ids.size() / 2, false);
}

Tensor classify(const ParamSet& theta, const Tensor& x) {
    Graph g;
    Bound b = bind_frozen(g, theta);
    return g.value(classify_node(g, b, g.input(x)));
}

Tensor encode(const ParamSet& psi, const Tensor& x, const std::vector<double>& msg,
              double strength) {
    Graph g;
    Bound b = bind_frozen(g, psi);
    Graph::NodeId m = g.input(Tensor({msg.size()}, msg));
    return g.value(encode_node(g, b, g.input(x), m, strength));
}

Tensor decode_logits(const ParamSet& phi, const Tensor& x_w) {
    Graph g;
    Bound b = bind_frozen(g, phi);
    return g.value(decode_node(g, b, g.input(x_w)));
}

std::vector<std::vector<int>> decode_bits(const Tensor& logits) {
    std::size_t n = logits.shape[0], L = logits.shape[1];
    std::vector<std::vector<int>> out(n, std::vector<int>(L, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < L; ++j) out[i][j] = logits(i, j) > 0.0 ? 1 : 0;
    return out;
}

}  // namespace w4mu::nets
