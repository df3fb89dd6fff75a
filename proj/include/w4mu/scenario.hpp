#pragma once

#include "w4mu/config.hpp"
#include "w4mu/evalx.hpp"

namespace w4mu::harness {

/// Intermediate artifacts one scenario run produces; exposed so callers
/// (sweeps, tests, the CLI) can reuse expensive pieces.
struct RunArtifacts {
    data::DatasetBundle splits;
    ParamSet theta_o;
    ParamSet theta_u;
    ParamSet psi;
    ParamSet phi;
    wm::WatermarkMessage message;
    eval::MetricsReport report;
};

/// Execute one full scenario:
///   S0 — unlearn and evaluate on unwatermarked data;
///   S1 — unlearn unwatermarked, evaluate on watermarked forget/retain/test;
///   S2 — unlearn on watermarked forget+retain (codec refined by the
///        bi-level solver when use_water4mu), evaluate unwatermarked.
/// The codec is always trained (its BER/PSNR columns describe the codec, not
/// the unlearning), so identity-strength runs reproduce S0 bit for bit.
RunArtifacts run_scenario_full(const ScenarioSpec& spec);
eval::MetricsReport run_scenario(const ScenarioSpec& spec);

/// Run the scenario and persist metrics.csv plus a resolved-config snapshot
/// under out_dir.
eval::MetricsReport run_scenario_to(const ScenarioSpec& spec, const std::string& out_dir);

/// One S2 run per lambda value (all else fixed), rows ordered by lambda.
/// Runs are independent and may be dispatched to worker threads.
std::vector<eval::MetricsReport> sweep_lambda(const std::vector<double>& values,
                                              const ScenarioSpec& base, bool parallel = true);

std::string reports_to_csv(const std::vector<eval::MetricsReport>& reports);

}  // namespace w4mu::harness
