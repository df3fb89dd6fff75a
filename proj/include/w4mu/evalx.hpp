#pragma once

#include <cstdint>
#include <string>

#include "w4mu/data.hpp"

namespace w4mu::eval {

/// One evaluation row of the scenario matrix.
struct MetricsReport {
    std::string run_id;
    std::string scenario;  // S0 | S1 | S2
    std::string method;
    std::uint64_t seed = 0;
    double ua = 0.0;        // percent
    double mia = 0.0;       // percent
    double ra = 0.0;        // percent
    double ta = 0.0;        // percent
    double ber = 0.0;       // [0,1]
    double psnr_db = 0.0;
    double rte_sec = 0.0;

    void validate() const;
};

/// 100 * fraction of argmax(logits) == label; ties by lowest class index.
double accuracy(const ParamSet& theta, const data::LabeledSet& set);

double ua(const ParamSet& theta_u, const data::LabeledSet& forget);

/// Loss-threshold membership attacker: fit tau on a member sample from the
/// retain set vs the test set (balanced accuracy, ties toward the smaller
/// tau), then report the fraction of forget samples with loss > tau.
double mia_efficacy(const ParamSet& theta_u, const data::LabeledSet& forget,
                    const data::LabeledSet& retain, const data::LabeledSet& test,
                    std::uint64_t attack_seed);

MetricsReport build_report(std::string run_id, std::string scenario, std::string method,
                           std::uint64_t seed, double ua, double mia, double ra, double ta,
                           double ber, double psnr_db, double rte_sec);

std::string csv_header();
std::string to_csv_row(const MetricsReport& r);
MetricsReport from_csv_row(const std::string& line);

}  // namespace w4mu::eval
