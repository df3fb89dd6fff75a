#pragma once

#include <cstdint>
#include <functional>

#include "w4mu/unlearn.hpp"
#include "w4mu/watermark.hpp"

namespace w4mu::blo {

enum class CorrectionScale { OneOverLambda, Unit };

struct BloConfig {
    int upper_epochs = 10;
    double upper_lr = 1e-4;
    int lower_epochs = 3;
    double lower_lr = 1e-2;
    std::size_t lower_batch = 64;
    double lambda_diag = 1e-2;   // diagonal-Hessian parameter
    double fd_step = 1e-3;       // central-difference step for the mixed term
    CorrectionScale correction = CorrectionScale::OneOverLambda;
    double msg_lr = 1e-3;
    int msg_epochs = 20;
    double msg_lambda = 1e-3;
    double rec_weight = 1.0;
    double dec_weight = 1.0;
    std::uint64_t seed = 0;

    double correction_factor(double lambda) const {
        return correction == CorrectionScale::OneOverLambda ? 1.0 / lambda : 1.0;
    }
    void validate() const;
};

/// Unlearn on watermarked forget/retain sets: embed both with (psi, m), then
/// run the gradient-difference method from theta_o. `msg` may be relaxed.
ParamSet lower_solve(const ParamSet& psi, const std::vector<double>& msg, const ParamSet& theta_o,
                     const data::DatasetBundle& splits, double strength, const BloConfig& cfg);

/// Upper objective: unlearning validation on the unwatermarked sets plus the
/// codec loss over forget ∪ retain.
double upper_objective(const ParamSet& psi, const ParamSet& phi, const ParamSet& theta_u,
                       const data::DatasetBundle& splits, const wm::WatermarkMessage& m,
                       double strength, const BloConfig& cfg);

/// Central finite difference of the mixed second-order term along g:
/// |g| * [grad_upper(theta + r*ghat) - grad_upper(theta - r*ghat)] / (2r).
/// `grad_upper` returns the gradient of the lower loss with respect to the
/// upper variables at fixed theta; zero vector when |g| < 1e-12.
std::vector<double> mixed_hvp(
    const std::function<std::vector<double>(const ParamSet& theta)>& grad_upper,
    const ParamSet& theta, const std::vector<double>& g, double r);

/// Gradient of the lower-level objective with respect to the encoder, at
/// fixed theta (data embedded with (psi, msg) inside the graph).
std::vector<double> grad_psi_lower(const ParamSet& psi, const std::vector<double>& msg,
                                   const ParamSet& theta, const data::DatasetBundle& splits,
                                   double strength);

/// Same, with respect to relaxed message logits z (encoder frozen).
std::vector<double> grad_z_lower(const ParamSet& psi, const std::vector<double>& z,
                                 const ParamSet& theta, const data::DatasetBundle& splits,
                                 double strength);

struct UpperGradient {
    std::vector<double> psi;   // flattened, entry order of the encoder set
    std::vector<double> phi;
    ParamSet theta_u;          // lower solution the gradient was taken at
};

/// Implicit-gradient upper step direction: the direct codec-loss gradients
/// minus c * mixed_hvp along g = grad_theta of the unlearning validation
/// term, with c = 1/lambda or 1 by configuration. The validation term has no
/// direct psi dependence (it touches psi only through theta_u), so its
/// direct contribution is structurally zero.
UpperGradient upper_gradient(const ParamSet& psi, const ParamSet& phi,
                             const wm::WatermarkMessage& m, const ParamSet& theta_o,
                             const data::DatasetBundle& splits, double strength,
                             const BloConfig& cfg);

struct TracePoint {
    double upper_objective;
    double ua;
    double ra;
};

struct TrainResult {
    ParamSet psi;
    ParamSet phi;
    std::vector<TracePoint> trace;  // per epoch, plus a final point
};

TrainResult water4mu_train(const ParamSet& theta_o, const data::DatasetBundle& splits,
                           const ParamSet& psi0, const ParamSet& phi0,
                           const wm::WatermarkMessage& m, double strength, const BloConfig& cfg);

struct MessageSelectResult {
    wm::WatermarkMessage message;
    std::vector<double> logits;
    std::vector<double> objective_trace;
};

/// Implicit-gradient descent over relaxed message logits z with the codec
/// frozen; the encoder consumes sigmoid(z) during optimization and the
/// result is the hard threshold of the final z.
MessageSelectResult message_select(const ParamSet& psi_w, const ParamSet& phi_w,
                                   const ParamSet& theta_o, const data::DatasetBundle& splits,
                                   const std::vector<double>& z0, double strength,
                                   const BloConfig& cfg);

// --- analytic verification oracle ----------------------------------------

/// Quadratic bi-level problem: lower loss 0.5*|theta - A psi|^2, upper loss
/// 0.5*|theta_u(psi) - b|^2. Exact hypergradient: A^T (A psi - b).
struct QuadBilevel {
    Tensor A;  // {n, p}
    std::vector<double> b;

    void validate() const;
};

std::vector<double> quad_oracle_hypergrad(const QuadBilevel& q, const std::vector<double>& psi);

/// Lower solve by gradient descent (converges to A psi).
std::vector<double> quad_lower_solve(const QuadBilevel& q, const std::vector<double>& psi,
                                     double lr, int iters);

/// The same implicit-gradient pipeline as upper_gradient, on the quadratic
/// problem: exact lower solve, g = theta_u - b, correction via mixed_hvp.
std::vector<double> quad_upper_gradient(const QuadBilevel& q, const std::vector<double>& psi,
                                        double fd_step, double lambda, CorrectionScale scale);

}  // namespace w4mu::blo
