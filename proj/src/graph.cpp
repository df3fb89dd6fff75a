#include "w4mu/graph.hpp"

#include <algorithm>
#include <cmath>

namespace w4mu {

namespace {

double stable_softplus(double x) {
    // log(1 + e^x) without overflow.
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid_val(double x) {
    if (x >= 0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Graph::NodeId Graph::emplace(Tensor value, bool requires_grad,
                             std::function<void(Graph&, NodeId)> backprop) {
    Node n;
    n.grad = Tensor::zeros(value.shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Graph::NodeId Graph::input(Tensor value) { return emplace(std::move(value), false); }

Graph::NodeId Graph::param(const std::string& name, Tensor value) {
    for (NodeId l : leaves_) {
        if (nodes_[l].name == name)
            throw ContractError("graph: duplicate parameter name '" + name + "'");
    }
    NodeId id = emplace(std::move(value), true);
    nodes_[id].name = name;
    leaves_.push_back(id);
    return id;
}

// Elementwise binary op with scalar broadcast on either side.
static void check_binary_shapes(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar()) {
        throw DimensionError("elementwise op: incompatible shapes " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_binary_shapes(ta, tb);
    const Tensor& big = ta.is_scalar() && !tb.is_scalar() ? tb : ta;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] + tb[tb.is_scalar() ? 0 : i];
    return emplace(std::move(out), needs(a) || needs(b), [a, b](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);
            for (std::size_t i = 0; i < go.size(); ++i) ga[ga.size() == 1 ? 0 : i] += go[i];
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);
            for (std::size_t i = 0; i < go.size(); ++i) gb[gb.size() == 1 ? 0 : i] += go[i];
        }
    });
}

Graph::NodeId Graph::sub(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_binary_shapes(ta, tb);
    const Tensor& big = ta.is_scalar() && !tb.is_scalar() ? tb : ta;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] - tb[tb.is_scalar() ? 0 : i];
    return emplace(std::move(out), needs(a) || needs(b), [a, b](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);
            for (std::size_t i = 0; i < go.size(); ++i) ga[ga.size() == 1 ? 0 : i] += go[i];
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);
            for (std::size_t i = 0; i < go.size(); ++i) gb[gb.size() == 1 ? 0 : i] -= go[i];
        }
    });
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    check_binary_shapes(ta, tb);
    const Tensor& big = ta.is_scalar() && !tb.is_scalar() ? tb : ta;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] * tb[tb.is_scalar() ? 0 : i];
    return emplace(std::move(out), needs(a) || needs(b), [a, b](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta = g.value(a);
        const Tensor& tb = g.value(b);
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[ga.size() == 1 ? 0 : i] += go[i] * tb[tb.is_scalar() ? 0 : i];
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);
            for (std::size_t i = 0; i < go.size(); ++i)
                gb[gb.size() == 1 ? 0 : i] += go[i] * ta[ta.is_scalar() ? 0 : i];
        }
    });
}

Graph::NodeId Graph::scale(NodeId a, double c) {
    Tensor out(value(a).shape);
    const Tensor& ta = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] * c;
    return emplace(std::move(out), needs(a), [a, c](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
}

Graph::NodeId Graph::relu(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
    return emplace(std::move(out), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        const Tensor& go = g.grad_of(self);
        const Tensor& ta = g.value(a);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < go.size(); ++i)
            if (ta[i] > 0.0) ga[i] += go[i];
    });
}

Graph::NodeId Graph::tanh(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(ta[i]);
    return emplace(std::move(out), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        const Tensor& go = g.grad_of(self);
        const Tensor& y = g.value(self);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - y[i] * y[i]);
    });
}

Graph::NodeId Graph::sigmoid(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_val(ta[i]);
    return emplace(std::move(out), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        const Tensor& go = g.grad_of(self);
        const Tensor& y = g.value(self);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
    });
}

Graph::NodeId Graph::clip01(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(ta[i], 0.0, 1.0);
    return emplace(std::move(out), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        const Tensor& go = g.grad_of(self);
        const Tensor& ta = g.value(a);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < go.size(); ++i)
            if (ta[i] >= 0.0 && ta[i] <= 1.0) ga[i] += go[i];
    });
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0]) {
        throw DimensionError("matmul: incompatible shapes " + ta.shape_str() + " x " +
                             tb.shape_str());
    }
    std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double av = ta(i, p);
            for (std::size_t j = 0; j < n; ++j) out(i, j) += av * tb(p, j);
        }
    return emplace(std::move(out), needs(a) || needs(b), [a, b](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta = g.value(a);
        const Tensor& tb = g.value(b);
        std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);  // dA += dC * B^T
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double gv = go(i, j);
                    for (std::size_t p = 0; p < k; ++p) ga(i, p) += gv * tb(p, j);
                }
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);  // dB += A^T * dC
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double av = ta(i, p);
                    for (std::size_t j = 0; j < n; ++j) gb(p, j) += av * go(i, j);
                }
        }
    });
}

Graph::NodeId Graph::add_bias(NodeId mat, NodeId bias) {
    const Tensor& tm = value(mat);
    const Tensor& tb = value(bias);
    if (tm.rank() != 2 || tb.rank() != 1 || tm.shape[1] != tb.shape[0]) {
        throw DimensionError("add_bias: shapes " + tm.shape_str() + " + " + tb.shape_str());
    }
    std::size_t n = tm.shape[0], d = tm.shape[1];
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = tm(i, j) + tb[j];
    return emplace(std::move(out), needs(mat) || needs(bias), [mat, bias](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        std::size_t n = go.shape[0], d = go.shape[1];
        if (g.needs(mat)) {
            Tensor& gm = g.grad_mut(mat);
            for (std::size_t i = 0; i < go.size(); ++i) gm[i] += go[i];
        }
        if (g.needs(bias)) {
            Tensor& gb = g.grad_mut(bias);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) gb[j] += go(i, j);
        }
    });
}

Graph::NodeId Graph::concat_cols(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[0] != tb.shape[0]) {
        throw DimensionError("concat_cols: shapes " + ta.shape_str() + " | " + tb.shape_str());
    }
    std::size_t n = ta.shape[0], p = ta.shape[1], q = tb.shape[1];
    Tensor out({n, p + q});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) out(i, j) = ta(i, j);
        for (std::size_t j = 0; j < q; ++j) out(i, p + j) = tb(i, j);
    }
    return emplace(std::move(out), needs(a) || needs(b), [a, b, p, q](Graph& g, NodeId self) {
        const Tensor& go = g.grad_of(self);
        std::size_t n = go.shape[0];
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) ga(i, j) += go(i, j);
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < q; ++j) gb(i, j) += go(i, p + j);
        }
    });
}

Graph::NodeId Graph::broadcast_rows(NodeId vec, std::size_t n) {
    const Tensor& tv = value(vec);
    if (tv.rank() != 1) throw DimensionError("broadcast_rows: expected rank-1, got " + tv.shape_str());
    std::size_t d = tv.shape[0];
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = tv[j];
    return emplace(std::move(out), needs(vec), [vec](Graph& g, NodeId self) {
        if (!g.needs(vec)) return;
        const Tensor& go = g.grad_of(self);
        Tensor& gv = g.grad_mut(vec);
        std::size_t n = go.shape[0], d = go.shape[1];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gv[j] += go(i, j);
    });
}

Graph::NodeId Graph::sum(NodeId a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double v : ta.data) s += v;
    return emplace(Tensor::scalar(s), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        double go = g.grad_of(self)[0];
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
    });
}

Graph::NodeId Graph::mean(NodeId a) {
    return scale(sum(a), 1.0 / static_cast<double>(value(a).size()));
}

Graph::NodeId Graph::l1(NodeId a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double v : ta.data) s += std::abs(v);
    return emplace(Tensor::scalar(s), needs(a), [a](Graph& g, NodeId self) {
        if (!g.needs(a)) return;
        double go = g.grad_of(self)[0];
        const Tensor& ta = g.value(a);
        Tensor& ga = g.grad_mut(a);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            if (ta[i] > 0.0) ga[i] += go;
            else if (ta[i] < 0.0) ga[i] -= go;
        }
    });
}

Graph::NodeId Graph::cross_entropy(NodeId logits, const std::vector<int>& labels) {
    const Tensor& tl = value(logits);
    if (tl.rank() != 2) throw DimensionError("cross_entropy: logits must be rank-2, got " + tl.shape_str());
    std::size_t n = tl.shape[0], c = tl.shape[1];
    if (labels.size() != n) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " rows");
    }
    if (n == 0) throw ValidationError("cross_entropy: empty batch");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw ValidationError("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                                  std::to_string(c) + ")");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = tl(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, tl(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(tl(i, j) - mx);
        lse = mx + std::log(lse);
        loss += lse - tl(i, static_cast<std::size_t>(labels[i]));
    }
    loss /= static_cast<double>(n);
    return emplace(Tensor::scalar(loss), needs(logits), [logits, labels](Graph& g, NodeId self) {
        if (!g.needs(logits)) return;
        double go = g.grad_of(self)[0];
        const Tensor& tl = g.value(logits);
        Tensor& gl = g.grad_mut(logits);
        std::size_t n = tl.shape[0], c = tl.shape[1];
        double invn = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            double mx = tl(i, 0);
            for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, tl(i, j));
            double z = 0.0;
            for (std::size_t j = 0; j < c; ++j) z += std::exp(tl(i, j) - mx);
            for (std::size_t j = 0; j < c; ++j) {
                double p = std::exp(tl(i, j) - mx) / z;
                double onehot = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
                gl(i, j) += go * (p - onehot) * invn;
            }
        }
    });
}

Graph::NodeId Graph::mse(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb))
        throw DimensionError("mse: shapes " + ta.shape_str() + " vs " + tb.shape_str());
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        double d = ta[i] - tb[i];
        s += d * d;
    }
    s /= static_cast<double>(ta.size());
    return emplace(Tensor::scalar(s), needs(a) || needs(b), [a, b](Graph& g, NodeId self) {
        double go = g.grad_of(self)[0];
        const Tensor& ta = g.value(a);
        const Tensor& tb = g.value(b);
        double c = 2.0 / static_cast<double>(ta.size());
        if (g.needs(a)) {
            Tensor& ga = g.grad_mut(a);
            for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go * c * (ta[i] - tb[i]);
        }
        if (g.needs(b)) {
            Tensor& gb = g.grad_mut(b);
            for (std::size_t i = 0; i < ta.size(); ++i) gb[i] -= go * c * (ta[i] - tb[i]);
        }
    });
}

Graph::NodeId Graph::bce_with_logits(NodeId logits, const std::vector<int>& bits) {
    const Tensor& tl = value(logits);
    if (tl.rank() == 1) {
        if (bits.size() != tl.size())
            throw DimensionError("bce_with_logits: " + std::to_string(bits.size()) + " bits for " +
                                 std::to_string(tl.size()) + " logits");
    } else if (tl.rank() == 2) {
        if (bits.size() != tl.shape[1])
            throw DimensionError("bce_with_logits: " + std::to_string(bits.size()) +
                                 " bits for rows of width " + std::to_string(tl.shape[1]));
    } else {
        throw DimensionError("bce_with_logits: unsupported shape " + tl.shape_str());
    }
    for (int b : bits)
        if (b != 0 && b != 1) throw ValidationError("bce_with_logits: bits must be 0/1");
    std::size_t width = tl.rank() == 2 ? tl.shape[1] : tl.size();
    double s = 0.0;
    for (std::size_t i = 0; i < tl.size(); ++i) {
        double t = static_cast<double>(bits[i % width]);
        s += stable_softplus(tl[i]) - tl[i] * t;
    }
    s /= static_cast<double>(tl.size());
    return emplace(Tensor::scalar(s), needs(logits), [logits, bits, width](Graph& g, NodeId self) {
        if (!g.needs(logits)) return;
        double go = g.grad_of(self)[0];
        const Tensor& tl = g.value(logits);
        Tensor& gl = g.grad_mut(logits);
        double invn = 1.0 / static_cast<double>(tl.size());
        for (std::size_t i = 0; i < tl.size(); ++i) {
            double t = static_cast<double>(bits[i % width]);
            gl[i] += go * (sigmoid_val(tl[i]) - t) * invn;
        }
    });
}

Graph::NodeId Graph::bce_with_logits_soft(NodeId logits, NodeId target) {
    const Tensor& tl = value(logits);
    const Tensor& tt = value(target);
    std::size_t width = tt.size();
    if (tl.size() % width != 0)
        throw DimensionError("bce_with_logits_soft: logits " + tl.shape_str() +
                             " not a multiple of target length " + std::to_string(width));
    double s = 0.0;
    for (std::size_t i = 0; i < tl.size(); ++i)
        s += stable_softplus(tl[i]) - tl[i] * tt[i % width];
    s /= static_cast<double>(tl.size());
    return emplace(Tensor::scalar(s), needs(logits) || needs(target),
                   [logits, target, width](Graph& g, NodeId self) {
                       double go = g.grad_of(self)[0];
                       const Tensor& tl = g.value(logits);
                       const Tensor& tt = g.value(target);
                       double invn = 1.0 / static_cast<double>(tl.size());
                       if (g.needs(logits)) {
                           Tensor& gl = g.grad_mut(logits);
                           for (std::size_t i = 0; i < tl.size(); ++i)
                               gl[i] += go * (sigmoid_val(tl[i]) - tt[i % width]) * invn;
                       }
                       if (g.needs(target)) {
                           Tensor& gt = g.grad_mut(target);
                           for (std::size_t i = 0; i < tl.size(); ++i)
                               gt[i % width] -= go * tl[i] * invn;
                       }
                   });
}

GradMap Graph::backward(NodeId loss) {
    if (loss >= nodes_.size()) throw ContractError("backward: unknown node id");
    if (!value(loss).is_scalar())
        throw ContractError("backward: loss must be scalar, got " + value(loss).shape_str());
    for (auto& n : nodes_)
        for (auto& v : n.grad.data) v = 0.0;
    nodes_[loss].grad[0] = 1.0;
    for (NodeId id = loss + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.requires_grad && n.backprop) n.backprop(*this, id);
    }
    GradMap out;
    for (NodeId l : leaves_) out.emplace(nodes_[l].name, nodes_[l].grad);
    return out;
}

std::vector<double> ce_rows(const Tensor& logits, const std::vector<int>& labels) {
    std::size_t n = logits.shape[0], c = logits.shape[1];
    if (labels.size() != n) throw DimensionError("ce_rows: label count mismatch");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(logits(i, j) - mx);
        out[i] = mx + std::log(lse) - logits(i, static_cast<std::size_t>(labels[i]));
    }
    return out;
}

}  // namespace w4mu
