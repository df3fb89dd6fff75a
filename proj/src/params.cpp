#include "w4mu/params.hpp"

#include <cmath>

#include "w4mu/errors.hpp"

namespace w4mu {

Tensor* ParamSet::find(const std::string& key) {
    for (auto& [k, t] : entries)
        if (k == key) return &t;
    return nullptr;
}

const Tensor* ParamSet::find(const std::string& key) const {
    for (const auto& [k, t] : entries)
        if (k == key) return &t;
    return nullptr;
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const auto& [k, t] : entries) n += t.size();
    return n;
}

bool ParamSet::same_shapes(const ParamSet& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first != other.entries[i].first) return false;
        if (entries[i].second.shape != other.entries[i].second.shape) return false;
    }
    return true;
}

std::vector<double> flatten(const ParamSet& p) {
    std::vector<double> out;
    out.reserve(p.total_size());
    for (const auto& [k, t] : p.entries) out.insert(out.end(), t.data.begin(), t.data.end());
    return out;
}

void unflatten_into(ParamSet& p, const std::vector<double>& flat) {
    if (flat.size() != p.total_size())
        throw DimensionError("unflatten: size mismatch " + std::to_string(flat.size()) + " vs " +
                             std::to_string(p.total_size()));
    std::size_t off = 0;
    for (auto& [k, t] : p.entries) {
        for (auto& v : t.data) v = flat[off++];
    }
}

std::vector<double> flatten_grads(const ParamSet& ref, const GradMap& grads) {
    std::vector<double> out;
    out.reserve(ref.total_size());
    for (const auto& [k, t] : ref.entries) {
        auto it = grads.find(k);
        if (it == grads.end()) {
            out.insert(out.end(), t.size(), 0.0);
        } else {
            out.insert(out.end(), it->second.data.begin(), it->second.data.end());
        }
    }
    return out;
}

void axpy(ParamSet& p, double a, const GradMap& g) {
    for (auto& [k, t] : p.entries) {
        auto it = g.find(k);
        if (it == g.end()) continue;
        if (!t.same_shape(it->second))
            throw DimensionError("axpy: shape mismatch on '" + k + "'");
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += a * it->second[i];
    }
}

void axpy_flat(ParamSet& p, double a, const std::vector<double>& flat) {
    if (flat.size() != p.total_size()) throw DimensionError("axpy_flat: size mismatch");
    std::size_t off = 0;
    for (auto& [k, t] : p.entries)
        for (auto& v : t.data) v += a * flat[off++];
}

GradMap strip_prefix(const GradMap& g, const std::string& prefix) {
    GradMap out;
    for (const auto& [k, t] : g) {
        if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0)
            out.emplace(k.substr(prefix.size()), t);
    }
    return out;
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace w4mu
