#pragma once

#include <cstdint>
#include <string>

#include "w4mu/params.hpp"
#include "w4mu/tensor.hpp"

namespace w4mu::data {

/// Features for train and test rows in one matrix; split membership is
/// carried by index lists. forget_idx and retain_idx partition the train
/// rows; test_idx is disjoint from both.
struct DatasetBundle {
    Tensor features;           // {N, d}, values in [0,1]
    std::vector<int> labels;   // length N, values in [0, n_classes)
    std::size_t n_classes = 0;
    std::vector<std::size_t> forget_idx;
    std::vector<std::size_t> retain_idx;
    std::vector<std::size_t> test_idx;

    std::size_t dim() const { return features.rank() == 2 ? features.shape[1] : 0; }
    std::vector<std::size_t> train_idx() const;  // forget ∪ retain, sorted
    void validate() const;
};

/// One extracted subset: stacked features plus matching labels.
struct LabeledSet {
    Tensor x;
    std::vector<int> y;
    std::size_t size() const { return y.size(); }
};

LabeledSet subset(const DatasetBundle& b, const std::vector<std::size_t>& idx);
LabeledSet forget_set(const DatasetBundle& b);
LabeledSet retain_set(const DatasetBundle& b);
LabeledSet test_set(const DatasetBundle& b);
LabeledSet train_set(const DatasetBundle& b);

struct SynthConfig {
    std::size_t n_train = 1024;
    std::size_t n_test = 256;
    std::size_t dim = 64;
    std::size_t n_classes = 4;
    double noise_sigma = 0.1;
};

/// Gaussian blobs around per-class templates drawn in [0.2, 0.8]^d, clipped
/// to [0,1]. Classes balanced to within one sample. Split-less: the forget
/// set starts empty with every train row in retain.
DatasetBundle make_synthetic(const SynthConfig& cfg, std::uint64_t seed);

DatasetBundle split_random(const DatasetBundle& b, double forget_ratio, std::uint64_t seed);
DatasetBundle split_class(const DatasetBundle& b, std::size_t class_id);

/// Worst-case proxy: forget the floor(ratio*N) train samples with the lowest
/// cross-entropy loss under theta_o (the most confidently fit points).
DatasetBundle split_worst_case(const DatasetBundle& b, const ParamSet& theta_o,
                               double forget_ratio);

/// CSV schema: header `idx,label,split,f0,...,f{d-1}`; split in
/// {forget,retain,test}; reals as shortest round-trip decimals.
void save_csv(const DatasetBundle& b, const std::string& path);
DatasetBundle load_csv(const std::string& path);

}  // namespace w4mu::data
