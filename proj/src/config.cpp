#include "w4mu/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "w4mu/errors.hpp"
#include "w4mu/rng.hpp"

namespace w4mu::harness {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::S0: return "S0";
        case Scenario::S1: return "S1";
        case Scenario::S2: return "S2";
    }
    return "?";
}

std::string to_string(ForgetMode m) {
    switch (m) {
        case ForgetMode::Random: return "random";
        case ForgetMode::Class: return "class";
        case ForgetMode::WorstCase: return "worst_case";
    }
    return "?";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Retrain: return "retrain";
        case Method::Ga: return "ga";
        case Method::Ft: return "ft";
        case Method::GradDiff: return "graddiff";
        case Method::Sparse: return "sparse";
        case Method::Iu: return "iu";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "S0" || s == "s0") return Scenario::S0;
    if (s == "S1" || s == "s1") return Scenario::S1;
    if (s == "S2" || s == "s2") return Scenario::S2;
    throw ConfigError("unknown scenario '" + s + "' (expected S0|S1|S2)");
}

ForgetMode forget_mode_from_string(const std::string& s) {
    if (s == "random") return ForgetMode::Random;
    if (s == "class") return ForgetMode::Class;
    if (s == "worst_case") return ForgetMode::WorstCase;
    throw ConfigError("unknown forget_mode '" + s + "'");
}

Method method_from_string(const std::string& s) {
    if (s == "retrain") return Method::Retrain;
    if (s == "ga") return Method::Ga;
    if (s == "ft") return Method::Ft;
    if (s == "graddiff") return Method::GradDiff;
    if (s == "sparse") return Method::Sparse;
    if (s == "iu") return Method::Iu;
    throw ConfigError("unknown method '" + s + "'");
}

int ScenarioSpec::resolved_epochs() const {
    if (unlearn_epochs >= 0) return unlearn_epochs;
    switch (method) {
        case Method::Retrain: return train_epochs;
        case Method::Ga: return 5;
        case Method::Ft: return 10;
        case Method::GradDiff: return blo_cfg.lower_epochs;
        case Method::Sparse: return 10;
        case Method::Iu: return 0;
    }
    return 0;
}

double ScenarioSpec::resolved_lr() const {
    if (unlearn_lr >= 0.0) return unlearn_lr;
    switch (method) {
        case Method::Retrain: return train_lr;
        case Method::Ga: return 1e-4;  // log-midpoint of the [1e-5, 1e-3] search range
        case Method::Ft: return 1e-2;  // log-midpoint of [1e-3, 1e-1]
        case Method::GradDiff: return blo_cfg.lower_lr;
        case Method::Sparse: return 1e-2;
        case Method::Iu: return 0.0;
    }
    return 0.0;
}

void ScenarioSpec::validate() const {
    if (use_message_selection && scenario != Scenario::S2)
        throw ConfigError("use_message_selection requires scenario S2 (watermarked unlearning)");
    if (!(forget_ratio > 0.0 && forget_ratio < 1.0))
        throw ConfigError("forget_ratio must be in (0,1)");
    if (forget_class >= data_cfg.n_classes) throw ConfigError("forget_class out of range");
    if (message_len == 0) throw ConfigError("message_len must be positive");
    if (strength < 0.0) throw ConfigError("strength must be >= 0");
    blo_cfg.validate();
}

// ---------------------------------------------------------------------------

namespace {

struct Entry {
    std::string value;
    std::size_t line;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

SectionMap read_ini(const std::string& text, const std::string& origin) {
    SectionMap out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
        auto l = s.find_first_not_of(" \t\r");
        if (l == std::string::npos) continue;
        auto r = s.find_last_not_of(" \t\r");
        s = s.substr(l, r - l + 1);
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = s.substr(1, s.size() - 2);
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string v) {
            auto a = v.find_first_not_of(" \t");
            auto b = v.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto [it, inserted] = out[section].emplace(key, Entry{value, lineno});
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in [" + section + "]");
    }
    return out;
}

class Resolver {
public:
    Resolver(SectionMap map, std::string origin) : map_(std::move(map)), origin_(std::move(origin)) {}

    bool take(const std::string& section, const std::string& key, std::string& out) {
        auto s = map_.find(section);
        if (s == map_.end()) return false;
        auto k = s->second.find(key);
        if (k == s->second.end()) return false;
        out = k->second.value;
        line_ = k->second.line;
        s->second.erase(k);
        return true;
    }

    template <typename T>
    void number(const std::string& section, const std::string& key, T& out) {
        std::string v;
        if (!take(section, key, v)) return;
        double parsed = 0.0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ConfigError(origin_ + ":" + std::to_string(line_) + ": '" + key +
                              "' expects a number, got '" + v + "'");
        if constexpr (std::is_integral_v<T>) {
            T cast = static_cast<T>(parsed);
            if (static_cast<double>(cast) != parsed)
                throw ConfigError(origin_ + ":" + std::to_string(line_) + ": '" + key +
                                  "' expects an integer, got '" + v + "'");
            out = cast;
        } else {
            out = static_cast<T>(parsed);
        }
    }

    void boolean(const std::string& section, const std::string& key, bool& out) {
        std::string v;
        if (!take(section, key, v)) return;
        if (v == "true" || v == "1" || v == "on") out = true;
        else if (v == "false" || v == "0" || v == "off") out = false;
        else
            throw ConfigError(origin_ + ":" + std::to_string(line_) + ": '" + key +
                              "' expects true/false, got '" + v + "'");
    }

    void hidden_list(const std::string& section, const std::string& key,
                     std::vector<std::size_t>& out) {
        std::string v;
        if (!take(section, key, v)) return;
        out.clear();
        if (v.empty() || v == "none") return;
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t w = 0;
            auto res = std::from_chars(tok.data(), tok.data() + tok.size(), w);
            if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || w == 0)
                throw ConfigError(origin_ + ":" + std::to_string(line_) + ": bad width '" + tok +
                                  "' in '" + key + "'");
            out.push_back(w);
        }
    }

    void reject_leftovers() const {
        for (const auto& [section, keys] : map_) {
            for (const auto& [key, entry] : keys)
                throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                                  key + "' in [" + section + "]");
        }
    }

    std::size_t line_ = 0;

private:
    SectionMap map_;
    std::string origin_;
};

}  // namespace

ScenarioSpec parse_config_text(const std::string& text, const std::string& origin) {
    Resolver r(read_ini(text, origin), origin);
    ScenarioSpec spec;

    std::string v;
    if (r.take("run", "scenario", v)) spec.scenario = scenario_from_string(v);
    if (r.take("run", "forget_mode", v)) spec.forget_mode = forget_mode_from_string(v);
    if (r.take("run", "method", v)) spec.method = method_from_string(v);
    r.boolean("run", "use_water4mu", spec.use_water4mu);
    r.boolean("run", "use_message_selection", spec.use_message_selection);
    r.boolean("run", "timing", spec.timing);
    r.number("run", "seed", spec.seed);

    r.number("data", "n_train", spec.data_cfg.n_train);
    r.number("data", "n_test", spec.data_cfg.n_test);
    r.number("data", "dim", spec.data_cfg.dim);
    r.number("data", "classes", spec.data_cfg.n_classes);
    r.number("data", "noise_sigma", spec.data_cfg.noise_sigma);
    r.number("data", "forget_ratio", spec.forget_ratio);
    r.number("data", "forget_class", spec.forget_class);

    r.hidden_list("model", "hidden", spec.classifier_hidden);

    r.number("train", "epochs", spec.train_epochs);
    r.number("train", "lr", spec.train_lr);
    r.number("train", "batch_size", spec.train_batch);

    r.number("wm", "message_len", spec.message_len);
    r.number("wm", "strength", spec.strength);
    r.hidden_list("wm", "hidden", spec.codec_hidden);
    r.number("wm", "epochs", spec.wm_cfg.epochs);
    r.number("wm", "lr", spec.wm_cfg.lr);
    r.number("wm", "batch_size", spec.wm_cfg.batch_size);
    r.number("wm", "rec_weight", spec.wm_cfg.rec_weight);
    r.number("wm", "dec_weight", spec.wm_cfg.dec_weight);

    r.number("unlearn", "epochs", spec.unlearn_epochs);
    r.number("unlearn", "lr", spec.unlearn_lr);
    r.number("unlearn", "batch_size", spec.unlearn_batch);
    r.number("unlearn", "sparse_gamma", spec.sparse_gamma);
    r.number("unlearn", "iu_alpha", spec.iu_alpha);

    r.number("blo", "upper_epochs", spec.blo_cfg.upper_epochs);
    r.number("blo", "upper_lr", spec.blo_cfg.upper_lr);
    r.number("blo", "lower_epochs", spec.blo_cfg.lower_epochs);
    r.number("blo", "lower_lr", spec.blo_cfg.lower_lr);
    r.number("blo", "lower_batch", spec.blo_cfg.lower_batch);
    r.number("blo", "lambda_diag", spec.blo_cfg.lambda_diag);
    r.number("blo", "fd_step", spec.blo_cfg.fd_step);
    if (r.take("blo", "correction_scale", v)) {
        if (v == "one_over_lambda") spec.blo_cfg.correction = blo::CorrectionScale::OneOverLambda;
        else if (v == "unit") spec.blo_cfg.correction = blo::CorrectionScale::Unit;
        else throw ConfigError("correction_scale must be one_over_lambda|unit, got '" + v + "'");
    }
    r.number("blo", "msg_lr", spec.blo_cfg.msg_lr);
    r.number("blo", "msg_epochs", spec.blo_cfg.msg_epochs);
    r.number("blo", "msg_lambda", spec.blo_cfg.msg_lambda);

    r.reject_leftovers();

    spec.wm_cfg.seed = spec.seed;
    spec.blo_cfg.seed = spec.seed;
    spec.blo_cfg.rec_weight = spec.wm_cfg.rec_weight;
    spec.blo_cfg.dec_weight = spec.wm_cfg.dec_weight;
    spec.validate();
    return spec;
}

ScenarioSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("parse_config: cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path);
}

static std::string fmt_num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string ScenarioSpec::resolved_ini() const {
    std::ostringstream out;
    out << "[run]\n";
    out << "scenario = " << to_string(scenario) << "\n";
    out << "forget_mode = " << to_string(forget_mode) << "\n";
    out << "method = " << to_string(method) << "\n";
    out << "use_water4mu = " << (use_water4mu ? "true" : "false") << "\n";
    out << "use_message_selection = " << (use_message_selection ? "true" : "false") << "\n";
    out << "timing = " << (timing ? "true" : "false") << "\n";
    out << "seed = " << seed << "\n";
    out << "\n[data]\n";
    out << "n_train = " << data_cfg.n_train << "\n";
    out << "n_test = " << data_cfg.n_test << "\n";
    out << "dim = " << data_cfg.dim << "\n";
    out << "classes = " << data_cfg.n_classes << "\n";
    out << "noise_sigma = " << fmt_num(data_cfg.noise_sigma) << "\n";
    out << "forget_ratio = " << fmt_num(forget_ratio) << "\n";
    out << "forget_class = " << forget_class << "\n";
    out << "\n[model]\n";
    out << "hidden = ";
    for (std::size_t i = 0; i < classifier_hidden.size(); ++i)
        out << (i ? "," : "") << classifier_hidden[i];
    out << "\n";
    out << "\n[train]\n";
    out << "epochs = " << train_epochs << "\n";
    out << "lr = " << fmt_num(train_lr) << "\n";
    out << "batch_size = " << train_batch << "\n";
    out << "\n[wm]\n";
    out << "message_len = " << message_len << "\n";
    out << "strength = " << fmt_num(strength) << "\n";
    out << "hidden = ";
    for (std::size_t i = 0; i < codec_hidden.size(); ++i) out << (i ? "," : "") << codec_hidden[i];
    out << "\n";
    out << "epochs = " << wm_cfg.epochs << "\n";
    out << "lr = " << fmt_num(wm_cfg.lr) << "\n";
    out << "batch_size = " << wm_cfg.batch_size << "\n";
    out << "rec_weight = " << fmt_num(wm_cfg.rec_weight) << "\n";
    out << "dec_weight = " << fmt_num(wm_cfg.dec_weight) << "\n";
    out << "\n[unlearn]\n";
    out << "epochs = " << unlearn_epochs << "\n";
    out << "lr = " << fmt_num(unlearn_lr) << "\n";
    out << "batch_size = " << unlearn_batch << "\n";
    out << "sparse_gamma = " << fmt_num(sparse_gamma) << "\n";
    out << "iu_alpha = " << fmt_num(iu_alpha) << "\n";
    out << "\n[blo]\n";
    out << "upper_epochs = " << blo_cfg.upper_epochs << "\n";
    out << "upper_lr = " << fmt_num(blo_cfg.upper_lr) << "\n";
    out << "lower_epochs = " << blo_cfg.lower_epochs << "\n";
    out << "lower_lr = " << fmt_num(blo_cfg.lower_lr) << "\n";
    out << "lower_batch = " << blo_cfg.lower_batch << "\n";
    out << "lambda_diag = " << fmt_num(blo_cfg.lambda_diag) << "\n";
    out << "fd_step = " << fmt_num(blo_cfg.fd_step) << "\n";
    out << "correction_scale = "
        << (blo_cfg.correction == blo::CorrectionScale::OneOverLambda ? "one_over_lambda" : "unit")
        << "\n";
    out << "msg_lr = " << fmt_num(blo_cfg.msg_lr) << "\n";
    out << "msg_epochs = " << blo_cfg.msg_epochs << "\n";
    out << "msg_lambda = " << fmt_num(blo_cfg.msg_lambda) << "\n";
    return out.str();
}

std::uint64_t ScenarioSpec::config_hash() const {
    // hash sorted key=value lines so formatting and ordering are immaterial
    std::istringstream in(resolved_ini());
    std::vector<std::string> lines;
    std::string section, line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line;
            continue;
        }
        lines.push_back(section + "/" + line);
    }
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& l : lines) h = fnv1a64(l) ^ (h * 0x100000001b3ULL);
    return h;
}

}  // namespace w4mu::harness
