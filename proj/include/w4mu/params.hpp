#pragma once

#include <string>
#include <utility>
#include <vector>

#include "w4mu/graph.hpp"
#include "w4mu/tensor.hpp"

namespace w4mu {

/// Named, ordered collection of tensors for one model (classifier, encoder
/// or decoder). Entry order is the canonical flattening order.
struct ParamSet {
    std::string name;
    std::vector<std::pair<std::string, Tensor>> entries;

    Tensor* find(const std::string& key);
    const Tensor* find(const std::string& key) const;
    std::size_t total_size() const;
    bool same_shapes(const ParamSet& other) const;
};

std::vector<double> flatten(const ParamSet& p);
void unflatten_into(ParamSet& p, const std::vector<double>& flat);

/// Flatten a gradient map in the entry order of `ref` (missing keys -> zeros).
std::vector<double> flatten_grads(const ParamSet& ref, const GradMap& grads);

/// p += a * g for every entry present in g.
void axpy(ParamSet& p, double a, const GradMap& g);
void axpy_flat(ParamSet& p, double a, const std::vector<double>& flat);

/// Keys of `g` that start with `prefix`, with the prefix stripped. Used when
/// several ParamSets share one graph under distinct prefixes.
GradMap strip_prefix(const GradMap& g, const std::string& prefix);

double l2_norm(const std::vector<double>& v);
double max_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8);

}  // namespace w4mu
