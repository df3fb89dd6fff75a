#include "w4mu/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>

#include "w4mu/errors.hpp"

namespace w4mu::harness {

namespace {

nets::ArchSpec classifier_arch(const ScenarioSpec& spec) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Classifier;
    a.input_dim = spec.data_cfg.dim;
    a.hidden = spec.classifier_hidden;
    a.output_dim = spec.data_cfg.n_classes;
    return a;
}

nets::ArchSpec encoder_arch(const ScenarioSpec& spec) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Encoder;
    a.input_dim = spec.data_cfg.dim;
    a.hidden = spec.codec_hidden;
    a.output_dim = spec.data_cfg.dim;
    a.message_len = spec.message_len;
    a.strength = spec.strength;
    return a;
}

nets::ArchSpec decoder_arch(const ScenarioSpec& spec) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Decoder;
    a.input_dim = spec.data_cfg.dim;
    a.hidden = spec.codec_hidden;
    a.output_dim = spec.message_len;
    return a;
}

data::DatasetBundle make_splits(const ScenarioSpec& spec, const ParamSet& theta_o) {
    data::DatasetBundle base = data::make_synthetic(spec.data_cfg, spec.seed);
    switch (spec.forget_mode) {
        case ForgetMode::Random: return data::split_random(base, spec.forget_ratio, spec.seed);
        case ForgetMode::Class: return data::split_class(base, spec.forget_class);
        case ForgetMode::WorstCase:
            return data::split_worst_case(base, theta_o, spec.forget_ratio);
    }
    throw ContractError("make_splits: unreachable");
}

ParamSet apply_method(const ScenarioSpec& spec, const ParamSet& theta_o,
                      const data::DatasetBundle& bundle) {
    data::LabeledSet forget = data::forget_set(bundle);
    data::LabeledSet retain = data::retain_set(bundle);
    mu::MuConfig cfg;
    cfg.epochs = spec.resolved_epochs();
    cfg.lr = spec.resolved_lr();
    cfg.batch_size = spec.unlearn_batch;
    cfg.seed = spec.seed;
    switch (spec.method) {
        case Method::Retrain:
            return mu::retrain(classifier_arch(spec), retain, spec.train_epochs, spec.train_lr,
                               spec.train_batch, spec.seed);
        case Method::Ga:
            cfg.lambda_f = 1.0;
            cfg.lambda_r = 0.0;
            return mu::unlearn_gd(theta_o, forget, retain, cfg);
        case Method::Ft:
            cfg.lambda_f = 0.0;
            cfg.lambda_r = 1.0;
            return mu::unlearn_gd(theta_o, forget, retain, cfg);
        case Method::GradDiff:
            cfg.lambda_f = 1.0;
            cfg.lambda_r = 1.0;
            return mu::unlearn_gd(theta_o, forget, retain, cfg);
        case Method::Sparse:
            cfg.sparse_gamma = spec.sparse_gamma;
            return mu::unlearn_sparse(theta_o, retain, cfg);
        case Method::Iu:
            cfg.iu_alpha = spec.iu_alpha;
            return mu::unlearn_iu(theta_o, forget, data::train_set(bundle), cfg);
    }
    throw ContractError("apply_method: unreachable");
}

}  // namespace

RunArtifacts run_scenario_full(const ScenarioSpec& spec) {
    spec.validate();
    RunArtifacts art;

    // original model on the full training set
    data::DatasetBundle base = data::make_synthetic(spec.data_cfg, spec.seed);
    art.theta_o = mu::train_original(classifier_arch(spec), data::train_set(base),
                                     spec.train_epochs, spec.train_lr, spec.train_batch,
                                     spec.seed);
    art.splits = make_splits(spec, art.theta_o);
    art.message = wm::WatermarkMessage::random(spec.message_len, spec.seed);

    // codec pretraining (every scenario: the BER/PSNR columns describe it)
    ParamSet psi0 = nets::init_params(encoder_arch(spec), spec.seed);
    ParamSet phi0 = nets::init_params(decoder_arch(spec), spec.seed + 1);
    data::LabeledSet train = data::train_set(art.splits);
    wm::WmTrainResult codec =
        wm::train_watermark(psi0, phi0, train.x, art.message, spec.wm_cfg, spec.strength);
    art.psi = std::move(codec.psi);
    art.phi = std::move(codec.phi);

    if (spec.scenario == Scenario::S2 && spec.use_water4mu) {
        blo::TrainResult blo_result = blo::water4mu_train(
            art.theta_o, art.splits, art.psi, art.phi, art.message, spec.strength, spec.blo_cfg);
        art.psi = std::move(blo_result.psi);
        art.phi = std::move(blo_result.phi);
    }
    if (spec.scenario == Scenario::S2 && spec.use_message_selection) {
        // start at the random message so the baseline (binarized z0) is that
        // message and selection refines it
        std::vector<double> z0(spec.message_len);
        for (std::size_t i = 0; i < z0.size(); ++i) z0[i] = art.message.bits[i] ? 2.0 : -2.0;
        blo::MessageSelectResult sel = blo::message_select(art.psi, art.phi, art.theta_o,
                                                           art.splits, z0, spec.strength,
                                                           spec.blo_cfg);
        art.message = sel.message;
    }

    // unlearning data per scenario
    data::DatasetBundle unlearn_bundle = art.splits;
    if (spec.scenario == Scenario::S2) {
        unlearn_bundle = wm::embed_dataset(art.psi, art.splits, art.message.as_real(),
                                           spec.strength, wm::Subset::Forget | wm::Subset::Retain);
    }

    auto t0 = std::chrono::steady_clock::now();
    art.theta_u = apply_method(spec, art.theta_o, unlearn_bundle);
    auto t1 = std::chrono::steady_clock::now();
    double rte = spec.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;

    // evaluation data per scenario
    data::DatasetBundle eval_bundle = art.splits;
    if (spec.scenario == Scenario::S1) {
        eval_bundle = wm::embed_dataset(art.psi, art.splits, art.message.as_real(), spec.strength,
                                        wm::Subset::Forget | wm::Subset::Retain | wm::Subset::Test);
    }

    data::LabeledSet forget = data::forget_set(eval_bundle);
    data::LabeledSet retain = data::retain_set(eval_bundle);
    data::LabeledSet test = data::test_set(eval_bundle);
    double ua = eval::ua(art.theta_u, forget);
    double mia = eval::mia_efficacy(art.theta_u, forget, retain, test, spec.seed);
    double ra = eval::accuracy(art.theta_u, retain);
    double ta = eval::accuracy(art.theta_u, test);

    // codec quality on the (unwatermarked) test set
    data::LabeledSet clean_test = data::test_set(art.splits);
    Tensor test_w = nets::encode(art.psi, clean_test.x, art.message.as_real(), spec.strength);
    double psnr_db = wm::psnr(clean_test.x, test_w);
    double ber = wm::ber_over(art.psi, art.phi, clean_test.x, art.message, spec.strength);

    std::string run_id = to_string(spec.scenario) + "-" + to_string(spec.method) +
                         (spec.use_water4mu ? "-w4mu" : "") +
                         (spec.use_message_selection ? "-msel" : "") + "-seed" +
                         std::to_string(spec.seed);
    art.report = eval::build_report(run_id, to_string(spec.scenario), to_string(spec.method),
                                    spec.seed, ua, mia, ra, ta, ber, psnr_db, rte);
    return art;
}

eval::MetricsReport run_scenario(const ScenarioSpec& spec) {
    return run_scenario_full(spec).report;
}

eval::MetricsReport run_scenario_to(const ScenarioSpec& spec, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunArtifacts art = run_scenario_full(spec);
    std::string csv_path = out_dir + "/metrics.csv";
    {
        std::ofstream out(csv_path);
        if (!out) throw IoError("run_scenario: cannot write '" + csv_path + "'");
        out << eval::csv_header() << "\n" << eval::to_csv_row(art.report) << "\n";
    }
    // resolved-config snapshot alongside the report, for auditability
    std::string cfg_path = out_dir + "/resolved_config.ini";
    std::ofstream cfg(cfg_path);
    if (!cfg) throw IoError("run_scenario: cannot write '" + cfg_path + "'");
    cfg << spec.resolved_ini();
    return art.report;
}

std::vector<eval::MetricsReport> sweep_lambda(const std::vector<double>& values,
                                              const ScenarioSpec& base, bool parallel) {
    if (values.empty()) throw ValidationError("sweep_lambda: empty value list");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    auto one = [&](double lambda) {
        ScenarioSpec spec = base;
        spec.scenario = Scenario::S2;
        spec.use_water4mu = true;
        spec.blo_cfg.lambda_diag = lambda;
        return run_scenario(spec);
    };

    std::vector<eval::MetricsReport> out(sorted.size());
    if (parallel && sorted.size() > 1) {
        std::vector<std::future<eval::MetricsReport>> jobs;
        jobs.reserve(sorted.size());
        for (double v : sorted)
            jobs.push_back(std::async(std::launch::async, one, v));
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < sorted.size(); ++i) out[i] = one(sorted[i]);
    }
    return out;
}

std::string reports_to_csv(const std::vector<eval::MetricsReport>& reports) {
    std::string out = eval::csv_header() + "\n";
    for (const auto& r : reports) out += eval::to_csv_row(r) + "\n";
    return out;
}

}  // namespace w4mu::harness
