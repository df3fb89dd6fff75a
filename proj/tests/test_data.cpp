#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "w4mu/data.hpp"
#include "w4mu/nets.hpp"

using namespace w4mu;

TEST_CASE("make_synthetic produces balanced classes in [0,1]") {
    data::SynthConfig cfg;
    data::DatasetBundle b = data::make_synthetic(cfg, 1);
    b.validate();
    CHECK(b.features.shape == std::vector<std::size_t>{1024 + 256, 64});
    CHECK(b.forget_idx.empty());
    CHECK(b.retain_idx.size() == 1024);
    CHECK(b.test_idx.size() == 256);
    for (double v : b.features.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    std::vector<int> counts(4, 0);
    for (std::size_t i : b.retain_idx) ++counts[b.labels[i]];
    for (int c : counts) CHECK(c == 256);
}

TEST_CASE("zero noise reproduces the class templates") {
    data::SynthConfig cfg;
    cfg.n_train = 8;
    cfg.n_test = 4;
    cfg.dim = 5;
    cfg.n_classes = 2;
    cfg.noise_sigma = 0.0;
    data::DatasetBundle b = data::make_synthetic(cfg, 3);
    // with zero noise every same-class row is identical
    std::vector<std::size_t> first(cfg.n_classes, SIZE_MAX);
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
        std::size_t c = b.labels[i];
        if (first[c] == SIZE_MAX) {
            first[c] = i;
            continue;
        }
        for (std::size_t j = 0; j < cfg.dim; ++j)
            CHECK(b.features.data[i * cfg.dim + j] ==
                  b.features.data[first[c] * cfg.dim + j]);
    }
}

TEST_CASE("split_random partitions with the documented count") {
    data::DatasetBundle b = data::make_synthetic(data::SynthConfig{}, 1);
    data::DatasetBundle s = data::split_random(b, 0.1, 1);
    s.validate();
    CHECK(s.forget_idx.size() == 102);  // floor(0.1 * 1024)
    CHECK(s.retain_idx.size() == 1024 - 102);
    std::set<std::size_t> all(s.forget_idx.begin(), s.forget_idx.end());
    for (std::size_t i : s.retain_idx) CHECK(all.insert(i).second);
    for (std::size_t i : s.test_idx) CHECK(all.insert(i).second);
    CHECK(all.size() == 1024 + 256);
    // deterministic
    data::DatasetBundle s2 = data::split_random(b, 0.1, 1);
    CHECK(s.forget_idx == s2.forget_idx);
    CHECK(data::split_random(b, 0.1, 2).forget_idx != s.forget_idx);
}

TEST_CASE("split_class forgets exactly the class") {
    data::DatasetBundle b = data::make_synthetic(data::SynthConfig{}, 2);
    data::DatasetBundle s = data::split_class(b, 1);
    s.validate();
    CHECK(s.forget_idx.size() == 256);
    for (std::size_t i : s.forget_idx) CHECK(b.labels[i] == 1);
    for (std::size_t i : s.retain_idx) CHECK(b.labels[i] != 1);
}

TEST_CASE("split_worst_case takes the lowest-loss rows") {
    data::SynthConfig cfg;
    cfg.n_train = 64;
    cfg.n_test = 16;
    cfg.dim = 6;
    cfg.n_classes = 2;
    data::DatasetBundle b = data::make_synthetic(cfg, 4);
    nets::ArchSpec arch{nets::ArchKind::Classifier, 6, {4}, 2};
    ParamSet theta = nets::init_params(arch, 4);
    data::DatasetBundle s = data::split_worst_case(b, theta, 0.25);
    s.validate();
    REQUIRE(s.forget_idx.size() == 16);
    data::LabeledSet train = data::train_set(b);
    Tensor logits = nets::classify(theta, train.x);
    std::vector<double> losses = ce_rows(logits, train.y);
    double max_forget = 0.0;
    for (std::size_t k = 0; k < s.forget_idx.size(); ++k)
        max_forget = std::max(max_forget, losses[s.forget_idx[k]]);
    for (std::size_t i : s.retain_idx) CHECK(losses[i] >= max_forget - 1e-12);
}

TEST_CASE("csv round trip preserves the bundle bit for bit") {
    data::SynthConfig cfg;
    cfg.n_train = 32;
    cfg.n_test = 8;
    cfg.dim = 5;
    cfg.n_classes = 2;
    data::DatasetBundle b = data::split_random(data::make_synthetic(cfg, 5), 0.25, 5);
    std::string path = (std::filesystem::temp_directory_path() / "w4mu_data_rt.csv").string();
    data::save_csv(b, path);
    data::DatasetBundle r = data::load_csv(path);
    CHECK(r.features.data == b.features.data);
    CHECK(r.labels == b.labels);
    CHECK(r.forget_idx == b.forget_idx);
    CHECK(r.retain_idx == b.retain_idx);
    CHECK(r.test_idx == b.test_idx);
    std::remove(path.c_str());
}

TEST_CASE("csv loader reports the offending line") {
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "w4mu_bad.csv").string();
    {
        FILE* f = fopen(path.c_str(), "w");
        fputs("idx,label,split,f0\n0,0,retain,0.5\n1,zero,test,0.25\n", f);
        fclose(f);
    }
    try {
        (void)data::load_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("subset extraction stacks features with matching labels") {
    data::SynthConfig cfg;
    cfg.n_train = 16;
    cfg.n_test = 4;
    cfg.dim = 4;
    cfg.n_classes = 2;
    data::DatasetBundle b = data::split_random(data::make_synthetic(cfg, 6), 0.25, 6);
    data::LabeledSet f = data::forget_set(b);
    REQUIRE(f.size() == b.forget_idx.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        CHECK(f.y[k] == b.labels[b.forget_idx[k]]);
        for (std::size_t j = 0; j < cfg.dim; ++j)
            CHECK(f.x.data[k * cfg.dim + j] == b.features.data[b.forget_idx[k] * cfg.dim + j]);
    }
}
