#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "w4mu/tensor.hpp"

namespace w4mu {

using GradMap = std::map<std::string, Tensor>;

/// Reverse-mode tape. Every op appends a node holding its forward value and
/// a closure that scatters the node's gradient back to its inputs. Nodes are
/// created in topological order by construction; backward walks the tape in
/// reverse creation order, which makes gradient accumulation deterministic.
class Graph {
public:
    using NodeId = std::size_t;

    /// Constant input; never receives a gradient.
    NodeId input(Tensor value);

    /// Named differentiable leaf. Names must be unique within a graph.
    NodeId param(const std::string& name, Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad_of(NodeId id) const { return nodes_[id].grad; }

    // --- elementwise / structural ops -------------------------------------
    NodeId add(NodeId a, NodeId b);   // equal shapes, or either side scalar
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId relu(NodeId a);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId clip01(NodeId a);
    NodeId matmul(NodeId a, NodeId b);
    NodeId add_bias(NodeId mat, NodeId bias);           // {n,d} + {d}
    NodeId concat_cols(NodeId a, NodeId b);             // {n,p} | {n,q} -> {n,p+q}
    NodeId broadcast_rows(NodeId vec, std::size_t n);   // {L} -> {n,L}
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId l1(NodeId a);  // sum of |x|, sign subgradient (0 at 0)

    // --- losses -----------------------------------------------------------
    NodeId cross_entropy(NodeId logits, const std::vector<int>& labels);
    NodeId mse(NodeId a, NodeId b);
    NodeId bce_with_logits(NodeId logits, const std::vector<int>& bits);
    /// BCE against a differentiable real-valued target in [0,1].
    NodeId bce_with_logits_soft(NodeId logits, NodeId target);

    /// Reverse pass from a scalar loss. Returns the gradient of every named
    /// leaf (zero-filled where the leaf did not participate).
    GradMap backward(NodeId loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::string name;  // leaves only
        std::function<void(Graph&, NodeId)> backprop;
    };

    NodeId emplace(Tensor value, bool requires_grad,
                   std::function<void(Graph&, NodeId)> backprop = nullptr);
    Tensor& grad_mut(NodeId id) { return nodes_[id].grad; }
    bool needs(NodeId id) const { return nodes_[id].requires_grad; }

    std::vector<Node> nodes_;
    std::vector<NodeId> leaves_;
};

/// Non-graph helper: per-row cross-entropy losses (used by the MIA attacker
/// and the worst-case split, where no gradients are needed).
std::vector<double> ce_rows(const Tensor& logits, const std::vector<int>& labels);

}  // namespace w4mu
