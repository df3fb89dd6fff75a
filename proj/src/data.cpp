#include "w4mu/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "w4mu/errors.hpp"
#include "w4mu/graph.hpp"
#include "w4mu/nets.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::data {

std::vector<std::size_t> DatasetBundle::train_idx() const {
    std::vector<std::size_t> out = forget_idx;
    out.insert(out.end(), retain_idx.begin(), retain_idx.end());
    std::sort(out.begin(), out.end());
    return out;
}

void DatasetBundle::validate() const {
    std::set<std::size_t> seen;
    for (const auto* list : {&forget_idx, &retain_idx, &test_idx}) {
        for (std::size_t i : *list) {
            if (i >= labels.size()) throw ValidationError("bundle: index out of range");
            if (!seen.insert(i).second) throw ValidationError("bundle: duplicate index");
        }
    }
    for (double v : features.data)
        if (v < 0.0 || v > 1.0 || !std::isfinite(v))
            throw ValidationError("bundle: feature outside [0,1]");
}

LabeledSet subset(const DatasetBundle& b, const std::vector<std::size_t>& idx) {
    LabeledSet s;
    s.x = gather_rows(b.features, idx);
    s.y.reserve(idx.size());
    for (std::size_t i : idx) s.y.push_back(b.labels[i]);
    return s;
}

LabeledSet forget_set(const DatasetBundle& b) { return subset(b, b.forget_idx); }
LabeledSet retain_set(const DatasetBundle& b) { return subset(b, b.retain_idx); }
LabeledSet test_set(const DatasetBundle& b) { return subset(b, b.test_idx); }
LabeledSet train_set(const DatasetBundle& b) { return subset(b, b.train_idx()); }

DatasetBundle make_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.dim < 4) throw ValidationError("make_synthetic: dim must be >= 4");
    if (cfg.n_classes < 2) throw ValidationError("make_synthetic: need >= 2 classes");
    if (cfg.n_train == 0 || cfg.n_test == 0)
        throw ValidationError("make_synthetic: empty dataset");

    Rng tmpl_rng = Rng::stream(seed, "templates");
    Tensor templates({cfg.n_classes, cfg.dim});
    for (auto& v : templates.data) v = tmpl_rng.uniform(0.2, 0.8);

    std::size_t n_total = cfg.n_train + cfg.n_test;
    DatasetBundle b;
    b.features = Tensor({n_total, cfg.dim});
    b.labels.resize(n_total);
    b.n_classes = cfg.n_classes;

    Rng noise_rng = Rng::stream(seed, "noise");
    for (std::size_t i = 0; i < n_total; ++i) {
        // round-robin labels keep both splits balanced to within one sample
        std::size_t local = i < cfg.n_train ? i : i - cfg.n_train;
        int label = static_cast<int>(local % cfg.n_classes);
        b.labels[i] = label;
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            double v = templates(static_cast<std::size_t>(label), j) +
                       cfg.noise_sigma * noise_rng.normal();
            b.features(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    b.retain_idx.resize(cfg.n_train);
    std::iota(b.retain_idx.begin(), b.retain_idx.end(), 0);
    b.test_idx.resize(cfg.n_test);
    std::iota(b.test_idx.begin(), b.test_idx.end(), cfg.n_train);
    return b;
}

static DatasetBundle with_forget(const DatasetBundle& b, std::vector<std::size_t> forget) {
    std::sort(forget.begin(), forget.end());
    std::set<std::size_t> fset(forget.begin(), forget.end());
    DatasetBundle out = b;
    out.forget_idx = std::move(forget);
    out.retain_idx.clear();
    for (std::size_t i : b.train_idx())
        if (!fset.count(i)) out.retain_idx.push_back(i);
    return out;
}

DatasetBundle split_random(const DatasetBundle& b, double forget_ratio, std::uint64_t seed) {
    if (!(forget_ratio > 0.0 && forget_ratio < 1.0))
        throw ValidationError("split_random: forget_ratio must be in (0,1)");
    std::vector<std::size_t> train = b.train_idx();
    std::size_t count = static_cast<std::size_t>(forget_ratio * static_cast<double>(train.size()));
    Rng rng = Rng::stream(seed, "split");
    std::vector<std::size_t> picks = rng.sample_without_replacement(train.size(), count);
    std::vector<std::size_t> forget;
    forget.reserve(count);
    for (std::size_t p : picks) forget.push_back(train[p]);
    return with_forget(b, std::move(forget));
}

DatasetBundle split_class(const DatasetBundle& b, std::size_t class_id) {
    if (class_id >= b.n_classes) throw ValidationError("split_class: class out of range");
    std::vector<std::size_t> forget;
    for (std::size_t i : b.train_idx())
        if (b.labels[i] == static_cast<int>(class_id)) forget.push_back(i);
    return with_forget(b, std::move(forget));
}

DatasetBundle split_worst_case(const DatasetBundle& b, const ParamSet& theta_o,
                               double forget_ratio) {
    if (!(forget_ratio > 0.0 && forget_ratio <= 1.0))
        throw ValidationError("split_worst_case: forget_ratio must be in (0,1]");
    std::vector<std::size_t> train = b.train_idx();
    LabeledSet ts = subset(b, train);
    std::vector<double> losses = ce_rows(nets::classify(theta_o, ts.x), ts.y);
    std::size_t count = static_cast<std::size_t>(forget_ratio * static_cast<double>(train.size()));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (losses[a] != losses[c]) return losses[a] < losses[c];
        return train[a] < train[c];  // ties by original index
    });
    std::vector<std::size_t> forget;
    forget.reserve(count);
    for (std::size_t i = 0; i < count; ++i) forget.push_back(train[order[i]]);
    return with_forget(b, std::move(forget));
}

static std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round trip
    return std::string(buf, res.ptr);
}

void save_csv(const DatasetBundle& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_csv: cannot open '" + path + "' for writing");
    std::size_t d = b.dim();
    out << "idx,label,split";
    for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
    out << "\n";
    auto emit = [&](const std::vector<std::size_t>& idx, const char* split) {
        for (std::size_t i : idx) {
            out << i << "," << b.labels[i] << "," << split;
            for (std::size_t j = 0; j < d; ++j) out << "," << fmt_double(b.features(i, j));
            out << "\n";
        }
    };
    emit(b.forget_idx, "forget");
    emit(b.retain_idx, "retain");
    emit(b.test_idx, "test");
    if (!out) throw IoError("save_csv: write failure on '" + path + "'");
}

DatasetBundle load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file '" + path + "'");
    ++lineno;
    // header: idx,label,split,f0,...
    std::vector<std::string> head;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) head.push_back(tok);
    }
    if (head.size() < 4 || head[0] != "idx" || head[1] != "label" || head[2] != "split")
        throw ParseError("load_csv: bad header at line 1");
    std::size_t d = head.size() - 3;

    struct Row {
        std::size_t idx;
        int label;
        int split;  // 0 forget, 1 retain, 2 test
        std::vector<double> f;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> tok;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, ',')) tok.push_back(t);
        if (tok.size() != d + 3)
            throw ParseError("load_csv: line " + std::to_string(lineno) + ": expected " +
                             std::to_string(d + 3) + " fields, got " + std::to_string(tok.size()));
        Row r;
        try {
            r.idx = std::stoul(tok[0]);
            r.label = std::stoi(tok[1]);
        } catch (const std::exception&) {
            throw ParseError("load_csv: line " + std::to_string(lineno) + ": bad integer field");
        }
        if (tok[2] == "forget") r.split = 0;
        else if (tok[2] == "retain") r.split = 1;
        else if (tok[2] == "test") r.split = 2;
        else
            throw ParseError("load_csv: line " + std::to_string(lineno) + ": unknown split '" +
                             tok[2] + "'");
        r.f.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            const std::string& s = tok[3 + j];
            auto res = std::from_chars(s.data(), s.data() + s.size(), r.f[j]);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw ParseError("load_csv: line " + std::to_string(lineno) + ": bad real '" + s +
                                 "'");
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ParseError("load_csv: no data rows in '" + path + "'");

    std::size_t n = 0;
    int max_label = 0;
    for (const auto& r : rows) {
        n = std::max(n, r.idx + 1);
        max_label = std::max(max_label, r.label);
    }
    DatasetBundle b;
    b.features = Tensor({n, d});
    b.labels.assign(n, 0);
    b.n_classes = static_cast<std::size_t>(max_label) + 1;
    for (const auto& r : rows) {
        b.labels[r.idx] = r.label;
        for (std::size_t j = 0; j < d; ++j) b.features(r.idx, j) = r.f[j];
        if (r.split == 0) b.forget_idx.push_back(r.idx);
        else if (r.split == 1) b.retain_idx.push_back(r.idx);
        else b.test_idx.push_back(r.idx);
    }
    std::sort(b.forget_idx.begin(), b.forget_idx.end());
    std::sort(b.retain_idx.begin(), b.retain_idx.end());
    std::sort(b.test_idx.begin(), b.test_idx.end());
    return b;
}

}  // namespace w4mu::data
