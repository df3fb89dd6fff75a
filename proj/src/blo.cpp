#include "w4mu/blo.hpp"

#include <cmath>

#include "w4mu/errors.hpp"
#include "w4mu/evalx.hpp"

namespace w4mu::blo {

void BloConfig::validate() const {
    if (upper_epochs < 0 || lower_epochs < 0 || msg_epochs < 0)
        throw ValidationError("blo config: epochs must be >= 0");
    if (!(lambda_diag > 0.0)) throw ValidationError("blo config: lambda_diag must be > 0");
    if (!(msg_lambda > 0.0)) throw ValidationError("blo config: msg_lambda must be > 0");
    if (!(fd_step > 0.0)) throw ValidationError("blo config: fd_step must be > 0");
    if (upper_lr < 0.0 || lower_lr < 0.0 || msg_lr < 0.0)
        throw ValidationError("blo config: learning rates must be >= 0");
}

void QuadBilevel::validate() const {
    if (A.rank() != 2 || b.size() != A.shape[0])
        throw DimensionError("quad bilevel: A " + A.shape_str() + " vs b length " +
                             std::to_string(b.size()));
}

ParamSet lower_solve(const ParamSet& psi, const std::vector<double>& msg, const ParamSet& theta_o,
                     const data::DatasetBundle& splits, double strength, const BloConfig& cfg) {
    cfg.validate();
    data::DatasetBundle hat =
        wm::embed_dataset(psi, splits, msg, strength, wm::Subset::Forget | wm::Subset::Retain);
    mu::MuConfig lower;
    lower.lambda_f = 1.0;
    lower.lambda_r = 1.0;
    lower.epochs = cfg.lower_epochs;
    lower.lr = cfg.lower_lr;
    lower.batch_size = cfg.lower_batch;
    lower.seed = cfg.seed;
    return mu::unlearn_gd(theta_o, data::forget_set(hat), data::retain_set(hat), lower);
}

double upper_objective(const ParamSet& psi, const ParamSet& phi, const ParamSet& theta_u,
                       const data::DatasetBundle& splits, const wm::WatermarkMessage& m,
                       double strength, const BloConfig& cfg) {
    data::LabeledSet forget = data::forget_set(splits);
    data::LabeledSet retain = data::retain_set(splits);
    double validation = mu::mu_loss(theta_u, forget, retain, 1.0, 1.0);
    data::LabeledSet train = data::train_set(splits);
    double codec = wm::wm_loss(psi, phi, m, train.x, strength, cfg.rec_weight, cfg.dec_weight);
    return validation + codec;
}

std::vector<double> mixed_hvp(
    const std::function<std::vector<double>(const ParamSet& theta)>& grad_upper,
    const ParamSet& theta, const std::vector<double>& g, double r) {
    if (!(r > 0.0)) throw ValidationError("mixed_hvp: r must be > 0");
    double norm = l2_norm(g);
    if (norm < 1e-12) {
        // probe direction undefined; the correction term vanishes with g
        std::vector<double> zero = grad_upper(theta);
        for (auto& v : zero) v = 0.0;
        return zero;
    }
    ParamSet plus = theta;
    ParamSet minus = theta;
    std::vector<double> dir(g);
    for (auto& v : dir) v /= norm;
    axpy_flat(plus, r, dir);
    axpy_flat(minus, -r, dir);
    std::vector<double> gp = grad_upper(plus);
    std::vector<double> gm = grad_upper(minus);
    std::vector<double> out(gp.size());
    double c = norm / (2.0 * r);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c * (gp[i] - gm[i]);
        if (!std::isfinite(out[i])) throw NumericError("mixed_hvp: non-finite component");
    }
    return out;
}

std::vector<double> grad_psi_lower(const ParamSet& psi, const std::vector<double>& msg,
                                   const ParamSet& theta, const data::DatasetBundle& splits,
                                   double strength) {
    data::LabeledSet forget = data::forget_set(splits);
    data::LabeledSet retain = data::retain_set(splits);
    Graph g;
    nets::Bound bpsi = nets::bind_trainable(g, psi);
    nets::Bound btheta = nets::bind_frozen(g, theta);
    Graph::NodeId mnode = g.input(Tensor({msg.size()}, msg));
    Graph::NodeId total = g.input(Tensor::scalar(0.0));
    if (forget.size() > 0) {
        Graph::NodeId fx = nets::encode_node(g, bpsi, g.input(forget.x), mnode, strength);
        Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, btheta, fx), forget.y);
        total = g.add(total, g.scale(ce, -1.0));
    }
    if (retain.size() > 0) {
        Graph::NodeId rx = nets::encode_node(g, bpsi, g.input(retain.x), mnode, strength);
        Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, btheta, rx), retain.y);
        total = g.add(total, ce);
    }
    return flatten_grads(psi, g.backward(total));
}

std::vector<double> grad_z_lower(const ParamSet& psi, const std::vector<double>& z,
                                 const ParamSet& theta, const data::DatasetBundle& splits,
                                 double strength) {
    data::LabeledSet forget = data::forget_set(splits);
    data::LabeledSet retain = data::retain_set(splits);
    Graph g;
    nets::Bound bpsi = nets::bind_frozen(g, psi);
    nets::Bound btheta = nets::bind_frozen(g, theta);
    Graph::NodeId znode = g.param("z", Tensor({z.size()}, z));
    Graph::NodeId mnode = g.sigmoid(znode);
    Graph::NodeId total = g.input(Tensor::scalar(0.0));
    if (forget.size() > 0) {
        Graph::NodeId fx = nets::encode_node(g, bpsi, g.input(forget.x), mnode, strength);
        Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, btheta, fx), forget.y);
        total = g.add(total, g.scale(ce, -1.0));
    }
    if (retain.size() > 0) {
        Graph::NodeId rx = nets::encode_node(g, bpsi, g.input(retain.x), mnode, strength);
        Graph::NodeId ce = g.cross_entropy(nets::classify_node(g, btheta, rx), retain.y);
        total = g.add(total, ce);
    }
    GradMap grads = g.backward(total);
    return grads.at("z").data;
}

// Direct gradients of the codec term over (psi, phi) on forget ∪ retain.
static std::pair<std::vector<double>, std::vector<double>> wm_term_grads(
    const ParamSet& psi, const ParamSet& phi, const wm::WatermarkMessage& m,
    const data::DatasetBundle& splits, double strength, const BloConfig& cfg) {
    data::LabeledSet train = data::train_set(splits);
    Graph g;
    nets::Bound bpsi = nets::bind_trainable(g, psi, "psi.");
    nets::Bound bphi = nets::bind_trainable(g, phi, "phi.");
    Graph::NodeId mnode = g.input(Tensor({m.size()}, m.as_real()));
    Graph::NodeId loss = wm::wm_loss_node(g, bpsi, bphi, g.input(train.x), mnode, m.bits, strength,
                                          cfg.rec_weight, cfg.dec_weight);
    GradMap grads = g.backward(loss);
    return {flatten_grads(psi, strip_prefix(grads, "psi.")),
            flatten_grads(phi, strip_prefix(grads, "phi."))};
}

UpperGradient upper_gradient(const ParamSet& psi, const ParamSet& phi,
                             const wm::WatermarkMessage& m, const ParamSet& theta_o,
                             const data::DatasetBundle& splits, double strength,
                             const BloConfig& cfg) {
    cfg.validate();
    UpperGradient out;
    out.theta_u = lower_solve(psi, m.as_real(), theta_o, splits, strength, cfg);

    // g = grad_theta of the unlearning validation term at theta_u; the codec
    // term of the upper objective does not depend on theta.
    GradMap gmap = mu::mu_loss_grad(out.theta_u, data::forget_set(splits),
                                    data::retain_set(splits), 1.0, 1.0);
    std::vector<double> g = flatten_grads(out.theta_u, gmap);

    auto [psi_wm, phi_wm] = wm_term_grads(psi, phi, m, splits, strength, cfg);
    std::vector<double> msg = m.as_real();
    std::vector<double> correction = mixed_hvp(
        [&](const ParamSet& th) { return grad_psi_lower(psi, msg, th, splits, strength); },
        out.theta_u, g, cfg.fd_step);

    double c = cfg.correction_factor(cfg.lambda_diag);
    out.psi.resize(psi_wm.size());
    for (std::size_t i = 0; i < psi_wm.size(); ++i) out.psi[i] = psi_wm[i] - c * correction[i];
    out.phi = std::move(phi_wm);
    return out;
}

TrainResult water4mu_train(const ParamSet& theta_o, const data::DatasetBundle& splits,
                           const ParamSet& psi0, const ParamSet& phi0,
                           const wm::WatermarkMessage& m, double strength, const BloConfig& cfg) {
    cfg.validate();
    TrainResult r;
    r.psi = psi0;
    r.phi = phi0;
    data::LabeledSet forget = data::forget_set(splits);
    data::LabeledSet retain = data::retain_set(splits);

    auto record = [&](const ParamSet& theta_u) {
        TracePoint p;
        p.upper_objective = upper_objective(r.psi, r.phi, theta_u, splits, m, strength, cfg);
        p.ua = forget.size() ? eval::ua(theta_u, forget) : 0.0;
        p.ra = retain.size() ? eval::accuracy(theta_u, retain) : 0.0;
        if (!std::isfinite(p.upper_objective))
            throw NumericError("water4mu_train: non-finite upper objective at epoch " +
                               std::to_string(r.trace.size()));
        r.trace.push_back(p);
    };

    for (int epoch = 0; epoch < cfg.upper_epochs; ++epoch) {
        UpperGradient g = upper_gradient(r.psi, r.phi, m, theta_o, splits, strength, cfg);
        record(g.theta_u);
        axpy_flat(r.psi, -cfg.upper_lr, g.psi);
        axpy_flat(r.phi, -cfg.upper_lr, g.phi);
    }
    // final point at the trained codec
    ParamSet theta_final = lower_solve(r.psi, m.as_real(), theta_o, splits, strength, cfg);
    record(theta_final);
    return r;
}

MessageSelectResult message_select(const ParamSet& psi_w, const ParamSet& phi_w,
                                   const ParamSet& theta_o, const data::DatasetBundle& splits,
                                   const std::vector<double>& z0, double strength,
                                   const BloConfig& cfg) {
    cfg.validate();
    std::vector<double> z = z0;
    data::LabeledSet train = data::train_set(splits);
    MessageSelectResult out;

    auto relaxed = [&](const std::vector<double>& zz) {
        std::vector<double> m(zz.size());
        for (std::size_t i = 0; i < zz.size(); ++i) m[i] = 1.0 / (1.0 + std::exp(-zz[i]));
        return m;
    };

    for (int epoch = 0; epoch < cfg.msg_epochs; ++epoch) {
        std::vector<double> m_soft = relaxed(z);
        ParamSet theta_u = lower_solve(psi_w, m_soft, theta_o, splits, strength, cfg);

        GradMap gmap = mu::mu_loss_grad(theta_u, data::forget_set(splits),
                                        data::retain_set(splits), 1.0, 1.0);
        std::vector<double> g = flatten_grads(theta_u, gmap);

        // direct term: d/dz of the codec loss with soft targets sigmoid(z)
        Graph gr;
        nets::Bound bpsi = nets::bind_frozen(gr, psi_w);
        nets::Bound bphi = nets::bind_frozen(gr, phi_w);
        Graph::NodeId znode = gr.param("z", Tensor({z.size()}, z));
        Graph::NodeId mnode = gr.sigmoid(znode);
        Graph::NodeId x = gr.input(train.x);
        Graph::NodeId x_w = nets::encode_node(gr, bpsi, x, mnode, strength);
        Graph::NodeId rec = gr.mse(x_w, x);
        Graph::NodeId dec =
            gr.bce_with_logits_soft(nets::decode_node(gr, bphi, x_w), mnode);
        Graph::NodeId loss =
            gr.add(gr.scale(rec, cfg.rec_weight), gr.scale(dec, cfg.dec_weight));
        double direct_val = gr.value(loss).item();
        std::vector<double> direct = gr.backward(loss).at("z").data;

        std::vector<double> correction = mixed_hvp(
            [&](const ParamSet& th) {
                return grad_z_lower(psi_w, z, th, splits, strength);
            },
            theta_u, g, cfg.fd_step);

        double c = cfg.correction_factor(cfg.msg_lambda);
        double validation = mu::mu_loss(theta_u, data::forget_set(splits),
                                        data::retain_set(splits), 1.0, 1.0);
        out.objective_trace.push_back(validation + direct_val);
        if (!std::isfinite(out.objective_trace.back()))
            throw NumericError("message_select: non-finite objective at epoch " +
                               std::to_string(epoch));
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= cfg.msg_lr * (direct[i] - c * correction[i]);
    }
    out.logits = z;
    out.message = wm::WatermarkMessage::from_logits(z);
    return out;
}

std::vector<double> quad_oracle_hypergrad(const QuadBilevel& q, const std::vector<double>& psi) {
    q.validate();
    std::size_t n = q.A.shape[0], p = q.A.shape[1];
    if (psi.size() != p) throw DimensionError("quad oracle: psi length mismatch");
    std::vector<double> resid(n, 0.0);  // A psi - b
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += q.A(i, j) * psi[j];
        resid[i] = s - q.b[i];
    }
    std::vector<double> out(p, 0.0);  // A^T resid
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) out[j] += q.A(i, j) * resid[i];
    return out;
}

std::vector<double> quad_lower_solve(const QuadBilevel& q, const std::vector<double>& psi,
                                     double lr, int iters) {
    q.validate();
    std::size_t n = q.A.shape[0], p = q.A.shape[1];
    std::vector<double> target(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) target[i] += q.A(i, j) * psi[j];
    std::vector<double> theta(n, 0.0);
    for (int it = 0; it < iters; ++it)
        for (std::size_t i = 0; i < n; ++i) theta[i] -= lr * (theta[i] - target[i]);
    return theta;
}

std::vector<double> quad_upper_gradient(const QuadBilevel& q, const std::vector<double>& psi,
                                        double fd_step, double lambda, CorrectionScale scale) {
    q.validate();
    std::size_t n = q.A.shape[0], p = q.A.shape[1];
    // exact lower solve
    std::vector<double> theta_u(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) theta_u[i] += q.A(i, j) * psi[j];
    // g = grad_theta of the upper loss 0.5|theta - b|^2
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = theta_u[i] - q.b[i];

    // wrap theta in a ParamSet so the shared mixed_hvp routine applies; the
    // lower-loss psi-gradient is computed through the autodiff graph.
    ParamSet theta_set;
    theta_set.name = "theta";
    theta_set.entries.emplace_back("theta", Tensor({n}, theta_u));

    auto grad_psi = [&](const ParamSet& th) {
        Graph gr;
        Graph::NodeId psi_col = gr.param("psi", Tensor({p, 1}, psi));
        Graph::NodeId apsi = gr.matmul(gr.input(q.A), psi_col);  // {n,1}
        Graph::NodeId theta_col = gr.input(Tensor({n, 1}, th.entries.front().second.data));
        Graph::NodeId diff = gr.sub(theta_col, apsi);
        Graph::NodeId loss = gr.scale(gr.sum(gr.mul(diff, diff)), 0.5);
        return gr.backward(loss).at("psi").data;
    };

    std::vector<double> correction = mixed_hvp(grad_psi, theta_set, g, fd_step);
    double c = scale == CorrectionScale::OneOverLambda ? 1.0 / lambda : 1.0;
    // direct psi-gradient of the upper loss is zero (it touches psi only
    // through theta_u)
    std::vector<double> out(p);
    for (std::size_t j = 0; j < p; ++j) out[j] = -c * correction[j];
    return out;
}

}  // namespace w4mu::blo
