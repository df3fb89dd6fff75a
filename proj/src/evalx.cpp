#include "w4mu/evalx.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "w4mu/errors.hpp"
#include "w4mu/graph.hpp"
#include "w4mu/nets.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::eval {

void MetricsReport::validate() const {
    for (double pct : {ua, mia, ra, ta}) {
        if (!(pct >= 0.0 && pct <= 100.0))
            throw ContractError("metrics report: percentage out of [0,100]");
    }
    if (!(ber >= 0.0 && ber <= 1.0)) throw ContractError("metrics report: ber out of [0,1]");
    if (!std::isfinite(psnr_db) || !std::isfinite(rte_sec) || rte_sec < 0.0)
        throw ContractError("metrics report: non-finite or negative field");
}

double accuracy(const ParamSet& theta, const data::LabeledSet& set) {
    if (set.size() == 0) throw ValidationError("accuracy: empty set");
    Tensor logits = nets::classify(theta, set.x);
    std::size_t c = logits.shape[1];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (logits(i, j) > logits(i, best)) best = j;  // ties keep lowest index
        if (static_cast<int>(best) == set.y[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(set.size());
}

double ua(const ParamSet& theta_u, const data::LabeledSet& forget) {
    if (forget.size() == 0) throw ValidationError("ua: empty forget set");
    return 100.0 - accuracy(theta_u, forget);
}

static std::vector<double> sample_losses(const ParamSet& theta, const data::LabeledSet& set) {
    return ce_rows(nets::classify(theta, set.x), set.y);
}

double mia_efficacy(const ParamSet& theta_u, const data::LabeledSet& forget,
                    const data::LabeledSet& retain, const data::LabeledSet& test,
                    std::uint64_t attack_seed) {
    if (forget.size() == 0 || retain.size() == 0 || test.size() == 0)
        throw ValidationError("mia_efficacy: all three sets must be nonempty");

    // Member sample comes from the retain set, never the forget set: fitting
    // on the forget losses would leak the quantity under test.
    std::size_t n_members = std::min(retain.size(), test.size());
    Rng rng = Rng::stream(attack_seed, "attack");
    std::vector<std::size_t> pick = rng.sample_without_replacement(retain.size(), n_members);

    std::vector<double> retain_all = sample_losses(theta_u, retain);
    std::vector<double> member_losses;
    member_losses.reserve(n_members);
    for (std::size_t i : pick) member_losses.push_back(retain_all[i]);
    std::vector<double> nonmember_losses = sample_losses(theta_u, test);

    // Candidate thresholds are the pooled loss values; the rule depends only
    // on the order of losses, so it is invariant to monotone transforms.
    std::vector<double> pool = member_losses;
    pool.insert(pool.end(), nonmember_losses.begin(), nonmember_losses.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    double best_tau = pool.front();
    double best_bacc = -1.0;
    for (double tau : pool) {
        std::size_t m_hit = 0, n_hit = 0;
        for (double l : member_losses)
            if (l <= tau) ++m_hit;
        for (double l : nonmember_losses)
            if (l > tau) ++n_hit;
        double bacc = 0.5 * (static_cast<double>(m_hit) / static_cast<double>(member_losses.size()) +
                             static_cast<double>(n_hit) / static_cast<double>(nonmember_losses.size()));
        if (bacc > best_bacc) {  // strict: ties resolve toward the smaller tau
            best_bacc = bacc;
            best_tau = tau;
        }
    }

    std::vector<double> forget_losses = sample_losses(theta_u, forget);
    std::size_t flagged = 0;
    for (double l : forget_losses)
        if (l > best_tau) ++flagged;
    return 100.0 * static_cast<double>(flagged) / static_cast<double>(forget_losses.size());
}

MetricsReport build_report(std::string run_id, std::string scenario, std::string method,
                           std::uint64_t seed, double ua, double mia, double ra, double ta,
                           double ber, double psnr_db, double rte_sec) {
    MetricsReport r;
    r.run_id = std::move(run_id);
    r.scenario = std::move(scenario);
    r.method = std::move(method);
    r.seed = seed;
    r.ua = ua;
    r.mia = mia;
    r.ra = ra;
    r.ta = ta;
    r.ber = ber;
    r.psnr_db = psnr_db;
    r.rte_sec = rte_sec;
    r.validate();
    return r;
}

std::string csv_header() { return "run_id,scenario,method,seed,ua,mia,ra,ta,ber,psnr_db,rte_sec"; }

static std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string to_csv_row(const MetricsReport& r) {
    std::ostringstream out;
    out << r.run_id << "," << r.scenario << "," << r.method << "," << r.seed << "," << fmt(r.ua)
        << "," << fmt(r.mia) << "," << fmt(r.ra) << "," << fmt(r.ta) << "," << fmt(r.ber) << ","
        << fmt(r.psnr_db) << "," << fmt(r.rte_sec);
    return out.str();
}

MetricsReport from_csv_row(const std::string& line) {
    std::vector<std::string> tok;
    std::stringstream ss(line);
    std::string t;
    while (std::getline(ss, t, ',')) tok.push_back(t);
    if (tok.size() != 11) throw ParseError("metrics csv: expected 11 fields, got " +
                                           std::to_string(tok.size()));
    auto num = [&](const std::string& s) {
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ParseError("metrics csv: bad real '" + s + "'");
        return v;
    };
    MetricsReport r;
    r.run_id = tok[0];
    r.scenario = tok[1];
    r.method = tok[2];
    r.seed = std::stoull(tok[3]);
    r.ua = num(tok[4]);
    r.mia = num(tok[5]);
    r.ra = num(tok[6]);
    r.ta = num(tok[7]);
    r.ber = num(tok[8]);
    r.psnr_db = num(tok[9]);
    r.rte_sec = num(tok[10]);
    r.validate();
    return r;
}

}  // namespace w4mu::eval
