#include "w4mu/unlearn.hpp"

#include <cmath>
#include <numeric>

#include "w4mu/errors.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::mu {

void MuConfig::validate() const {
    if (lambda_f < 0.0 || lambda_r < 0.0)
        throw ValidationError("mu config: lambdas must be >= 0");
    if (epochs < 0) throw ValidationError("mu config: epochs must be >= 0");
    if (lr < 0.0) throw ValidationError("mu config: lr must be >= 0");
    if (batch_size < 1) throw ValidationError("mu config: batch_size must be >= 1");
}

Graph::NodeId mu_loss_node(Graph& g, const nets::Bound& theta, Graph::NodeId forget_x,
                           const std::vector<int>& forget_y, Graph::NodeId retain_x,
                           const std::vector<int>& retain_y, double lambda_f, double lambda_r) {
    Graph::NodeId total = g.input(Tensor::scalar(0.0));
    bool have_term = false;
    if (lambda_f > 0.0 && !forget_y.empty()) {
        Graph::NodeId ce_f = g.cross_entropy(nets::classify_node(g, theta, forget_x), forget_y);
        total = g.add(total, g.scale(ce_f, -lambda_f));
        have_term = true;
    }
    if (lambda_r > 0.0 && !retain_y.empty()) {
        Graph::NodeId ce_r = g.cross_entropy(nets::classify_node(g, theta, retain_x), retain_y);
        total = g.add(total, g.scale(ce_r, lambda_r));
        have_term = true;
    }
    if (!have_term && (lambda_f > 0.0 || lambda_r > 0.0))
        throw ValidationError("mu_loss: all active sets empty");
    return total;
}

double mu_loss(const ParamSet& theta, const data::LabeledSet& forget,
               const data::LabeledSet& retain, double lambda_f, double lambda_r) {
    // -lambda_f * CE(forget) + lambda_r * CE(retain); empty terms are 0.
    double total = 0.0;
    if (lambda_f > 0.0 && forget.size() > 0) {
        std::vector<double> lf = ce_rows(nets::classify(theta, forget.x), forget.y);
        double mean = std::accumulate(lf.begin(), lf.end(), 0.0) / static_cast<double>(lf.size());
        total -= lambda_f * mean;
    }
    if (lambda_r > 0.0 && retain.size() > 0) {
        std::vector<double> lr = ce_rows(nets::classify(theta, retain.x), retain.y);
        double mean = std::accumulate(lr.begin(), lr.end(), 0.0) / static_cast<double>(lr.size());
        total += lambda_r * mean;
    }
    if (lambda_f > 0.0 && lambda_r > 0.0 && forget.size() == 0 && retain.size() == 0)
        throw ValidationError("mu_loss: both sets empty");
    return total;
}

GradMap mu_loss_grad(const ParamSet& theta, const data::LabeledSet& forget,
                     const data::LabeledSet& retain, double lambda_f, double lambda_r) {
    Graph g;
    nets::Bound b = nets::bind_trainable(g, theta);
    std::size_t in_dim = theta.entries.front().second.shape[0];
    Graph::NodeId fx = g.input(forget.size() ? forget.x : Tensor({0, in_dim}));
    Graph::NodeId rx = g.input(retain.size() ? retain.x : Tensor({0, in_dim}));
    Graph::NodeId loss = mu_loss_node(g, b, fx, forget.y, rx, retain.y, lambda_f, lambda_r);
    return g.backward(loss);
}

static Tensor stack_batch(const Tensor& x, const std::vector<std::size_t>& idx) {
    return gather_rows(x, idx);
}

// Shared SGD loop over the weighted objective. Steps per epoch follow the
// larger active set; the smaller one cycles.
static ParamSet descend(const ParamSet& start, const data::LabeledSet& forget,
                        const data::LabeledSet& retain, const MuConfig& cfg, double l1_gamma,
                        const char* who) {
    cfg.validate();
    ParamSet theta = start;
    bool use_f = cfg.lambda_f > 0.0 && forget.size() > 0;
    bool use_r = cfg.lambda_r > 0.0 && retain.size() > 0;
    if (!use_f && !use_r) return theta;

    std::size_t nf = forget.size(), nr = retain.size();
    std::size_t driver = std::max(use_f ? nf : 0, use_r ? nr : 0);
    std::size_t steps_per_epoch = (driver + cfg.batch_size - 1) / cfg.batch_size;

    std::vector<std::size_t> f_order(nf), r_order(nr);
    std::iota(f_order.begin(), f_order.end(), 0);
    std::iota(r_order.begin(), r_order.end(), 0);

    std::size_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (use_f) Rng::stream(cfg.seed, "shuffle-f", static_cast<std::uint64_t>(epoch)).shuffle(f_order);
        if (use_r) Rng::stream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)).shuffle(r_order);
        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
            Graph g;
            nets::Bound b = nets::bind_trainable(g, theta);
            Graph::NodeId loss = g.input(Tensor::scalar(0.0));
            if (use_f) {
                std::vector<std::size_t> idx;
                std::vector<int> y;
                for (std::size_t k = 0; k < cfg.batch_size; ++k) {
                    std::size_t pos = (s * cfg.batch_size + k);
                    if (driver == nf && pos >= nf) break;
                    std::size_t i = f_order[pos % nf];
                    idx.push_back(i);
                    y.push_back(forget.y[i]);
                }
                if (!idx.empty()) {
                    Graph::NodeId fx = g.input(stack_batch(forget.x, idx));
                    Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, b, fx), y);
                    loss = g.add(loss, g.scale(ce, -cfg.lambda_f));
                }
            }
            if (use_r) {
                std::vector<std::size_t> idx;
                std::vector<int> y;
                for (std::size_t k = 0; k < cfg.batch_size; ++k) {
                    std::size_t pos = (s * cfg.batch_size + k);
                    if (driver == nr && pos >= nr) break;
                    std::size_t i = r_order[pos % nr];
                    idx.push_back(i);
                    y.push_back(retain.y[i]);
                }
                if (!idx.empty()) {
                    Graph::NodeId rx = g.input(stack_batch(retain.x, idx));
                    Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, b, rx), y);
                    loss = g.add(loss, g.scale(ce, cfg.lambda_r));
                }
            }
            if (l1_gamma > 0.0) {
                for (const auto& [k, t] : theta.entries)
                    loss = g.add(loss, g.scale(g.l1(b.at(k)), l1_gamma));
            }
            double lv = g.value(loss).item();
            if (!std::isfinite(lv))
                throw NumericError(std::string(who) + ": non-finite loss at step " +
                                   std::to_string(step));
            GradMap grads = g.backward(loss);
            axpy(theta, -cfg.lr, grads);
        }
    }
    return theta;
}

ParamSet train_original(const nets::ArchSpec& arch, const data::LabeledSet& train, int epochs,
                        double lr, std::size_t batch_size, std::uint64_t seed) {
    if (train.size() == 0) throw ValidationError("train_original: empty dataset");
    ParamSet theta0 = nets::init_params(arch, seed);
    MuConfig cfg;
    cfg.lambda_f = 0.0;
    cfg.lambda_r = 1.0;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    return descend(theta0, {}, train, cfg, 0.0, "train_original");
}

ParamSet retrain(const nets::ArchSpec& arch, const data::LabeledSet& retain, int epochs, double lr,
                 std::size_t batch_size, std::uint64_t seed) {
    return train_original(arch, retain, epochs, lr, batch_size, seed);
}

ParamSet unlearn_gd(const ParamSet& theta_o, const data::LabeledSet& forget,
                    const data::LabeledSet& retain, const MuConfig& cfg) {
    if (cfg.lambda_f > 0.0 && forget.size() == 0 && cfg.lambda_r == 0.0)
        throw ValidationError("unlearn_gd: gradient ascent needs a nonempty forget set");
    if (cfg.lambda_r > 0.0 && retain.size() == 0 && cfg.lambda_f == 0.0)
        throw ValidationError("unlearn_gd: fine-tuning needs a nonempty retain set");
    return descend(theta_o, forget, retain, cfg, 0.0, "unlearn_gd");
}

ParamSet unlearn_sparse(const ParamSet& theta_o, const data::LabeledSet& retain,
                        const MuConfig& cfg) {
    if (cfg.sparse_gamma < 0.0) throw ValidationError("unlearn_sparse: gamma must be >= 0");
    MuConfig ft = cfg;
    ft.lambda_f = 0.0;
    ft.lambda_r = 1.0;
    return descend(theta_o, {}, retain, ft, cfg.sparse_gamma, "unlearn_sparse");
}

ParamSet unlearn_iu(const ParamSet& theta_o, const data::LabeledSet& forget,
                    const data::LabeledSet& full_train, const MuConfig& cfg) {
    if (!(cfg.iu_alpha > 0.0)) throw ValidationError("unlearn_iu: alpha must be > 0");
    ParamSet theta = theta_o;
    if (forget.size() == 0) return theta;

    std::size_t dim = theta_o.total_size();
    std::vector<double> fisher(dim, 0.0);
    std::vector<double> forget_sum(dim, 0.0);

    auto sample_grad = [&](const Tensor& x_row, int y) {
        Graph g;
        nets::Bound b = nets::bind_trainable(g, theta_o);
        Graph::NodeId logits = nets::classify_node(g, b, g.input(x_row));
        GradMap grads = g.backward(g.cross_entropy(logits, {y}));
        return flatten_grads(theta_o, grads);
    };

    for (std::size_t i = 0; i < full_train.size(); ++i) {
        std::vector<double> gi = sample_grad(full_train.x.row(i), full_train.y[i]);
        for (std::size_t k = 0; k < dim; ++k) fisher[k] += gi[k] * gi[k];
    }
    double inv_n = 1.0 / static_cast<double>(full_train.size());
    for (auto& f : fisher) f = f * inv_n + cfg.iu_alpha;

    for (std::size_t i = 0; i < forget.size(); ++i) {
        std::vector<double> gi = sample_grad(forget.x.row(i), forget.y[i]);
        for (std::size_t k = 0; k < dim; ++k) forget_sum[k] += gi[k];
    }

    std::vector<double> update(dim);
    for (std::size_t k = 0; k < dim; ++k) update[k] = inv_n * forget_sum[k] / fisher[k];
    axpy_flat(theta, 1.0, update);
    return theta;
}

}  // namespace w4mu::mu
