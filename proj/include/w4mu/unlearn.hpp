#pragma once

#include <cstdint>

#include "w4mu/data.hpp"
#include "w4mu/nets.hpp"

namespace w4mu::mu {

/// Weighted unlearning objective: lambda_f * (-CE on forget) + lambda_r *
/// (CE on retain). (1,0) is gradient ascent, (0,1) fine-tuning, (1,1) the
/// gradient-difference method.
struct MuConfig {
    double lambda_f = 1.0;
    double lambda_r = 1.0;
    int epochs = 0;
    double lr = 0.0;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double sparse_gamma = 0.0;  // l1 weight, Sparse only
    double iu_alpha = 1.0;      // Fisher damping, IU only

    void validate() const;
};

/// Graph node for the objective on the given (already stacked) sets. Empty
/// sets contribute zero to their term.
Graph::NodeId mu_loss_node(Graph& g, const nets::Bound& theta, Graph::NodeId forget_x,
                           const std::vector<int>& forget_y, Graph::NodeId retain_x,
                           const std::vector<int>& retain_y, double lambda_f, double lambda_r);

double mu_loss(const ParamSet& theta, const data::LabeledSet& forget,
               const data::LabeledSet& retain, double lambda_f, double lambda_r);

GradMap mu_loss_grad(const ParamSet& theta, const data::LabeledSet& forget,
                     const data::LabeledSet& retain, double lambda_f, double lambda_r);

/// Mini-batch CE descent from a fresh initialization. Batch order is drawn
/// from a (seed, epoch) stream over the sample indices, so retraining with
/// an empty forget set replays this exactly.
ParamSet train_original(const nets::ArchSpec& arch, const data::LabeledSet& train, int epochs,
                        double lr, std::size_t batch_size, std::uint64_t seed);

ParamSet retrain(const nets::ArchSpec& arch, const data::LabeledSet& retain, int epochs, double lr,
                 std::size_t batch_size, std::uint64_t seed);

/// GA / FT / GradDiff by lambda settings: epochs of mini-batch descent on
/// the weighted objective, starting from theta_o.
ParamSet unlearn_gd(const ParamSet& theta_o, const data::LabeledSet& forget,
                    const data::LabeledSet& retain, const MuConfig& cfg);

/// FT plus an l1 penalty: descent on CE(retain) + gamma * |theta|_1.
ParamSet unlearn_sparse(const ParamSet& theta_o, const data::LabeledSet& retain,
                        const MuConfig& cfg);

/// One-shot influence update with a damped diagonal empirical Fisher:
/// theta_o + (1/|D|) * Fhat^-1 * sum_{x in forget} grad CE(theta_o; x).
ParamSet unlearn_iu(const ParamSet& theta_o, const data::LabeledSet& forget,
                    const data::LabeledSet& full_train, const MuConfig& cfg);

}  // namespace w4mu::mu
