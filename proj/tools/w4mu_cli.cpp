// w4mu — command-line driver for the watermark-aware unlearning lab.
//
// Artifact pipeline (all paths relative to --out):
//   gen-data        -> dataset.csv
//   train           -> theta_o.w4mu
//   train-wm        -> codec.w4mu          (encoder psi + decoder phi)
//   water4mu        -> codec.w4mu          (refined by the bi-level solver)
//   select-message  -> message.w4mu
//   unlearn         -> theta_u.w4mu
//   eval            -> metrics.csv
//   scenario        -> metrics.csv + resolved_config.ini (end to end)
//   sweep           -> sweep.csv
//
// Exit codes: 0 success, 2 config error, 3 numeric abort, 4 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "w4mu/checkpoint.hpp"
#include "w4mu/scenario.hpp"

namespace fs = std::filesystem;
using namespace w4mu;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "INI config file (missing keys take defaults)");
    cmd->add_option("--seed", c.seed, "Override the config seed");
    cmd->add_option("--out", c.out_dir, "Artifact directory")->capture_default_str();
    cmd->add_flag("--quiet", c.quiet, "Suppress progress output");
}

harness::ScenarioSpec load_spec(const Common& c) {
    harness::ScenarioSpec spec =
        c.config_path.empty() ? harness::ScenarioSpec{} : harness::parse_config(c.config_path);
    if (c.seed) {
        spec.seed = *c.seed;
        spec.wm_cfg.seed = *c.seed;
        spec.blo_cfg.seed = *c.seed;
    }
    spec.validate();
    return spec;
}

void say(const Common& c, const std::string& msg) {
    if (!c.quiet) std::cout << msg << "\n";
}

std::string art(const Common& c, const char* name) { return c.out_dir + "/" + name; }

void require_artifact(const std::string& path, const char* producer) {
    if (!fs::exists(path))
        throw IoError("missing artifact '" + path + "' — run `w4mu " + producer +
                      "` first (same --out)");
}

data::DatasetBundle load_dataset(const Common& c) {
    std::string path = art(c, "dataset.csv");
    require_artifact(path, "gen-data");
    return data::load_csv(path);
}

nets::ArchSpec classifier_arch(const harness::ScenarioSpec& s) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Classifier;
    a.input_dim = s.data_cfg.dim;
    a.hidden = s.classifier_hidden;
    a.output_dim = s.data_cfg.n_classes;
    return a;
}

nets::ArchSpec encoder_arch(const harness::ScenarioSpec& s) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Encoder;
    a.input_dim = s.data_cfg.dim;
    a.hidden = s.codec_hidden;
    a.output_dim = s.data_cfg.dim;
    a.message_len = s.message_len;
    a.strength = s.strength;
    return a;
}

nets::ArchSpec decoder_arch(const harness::ScenarioSpec& s) {
    nets::ArchSpec a;
    a.kind = nets::ArchKind::Decoder;
    a.input_dim = s.data_cfg.dim;
    a.hidden = s.codec_hidden;
    a.output_dim = s.message_len;
    return a;
}

ParamSet message_to_set(const wm::WatermarkMessage& m) {
    ParamSet s;
    s.name = "message";
    Tensor t = Tensor::zeros({m.size()});
    for (std::size_t i = 0; i < m.size(); ++i) t.data[i] = static_cast<double>(m.bits[i]);
    s.entries.emplace_back("bits", std::move(t));
    return s;
}

wm::WatermarkMessage message_from_set(const ParamSet& s) {
    const Tensor* t = s.find("bits");
    if (!t) throw ParseError("message checkpoint lacks a 'bits' array");
    wm::WatermarkMessage m;
    for (double v : t->data) m.bits.push_back(v > 0.5 ? 1 : 0);
    return m;
}

wm::WatermarkMessage load_or_default_message(const Common& c, const harness::ScenarioSpec& spec) {
    std::string path = art(c, "message.w4mu");
    if (fs::exists(path))
        return message_from_set(harness::load_checkpoint_set(path, "message"));
    return wm::WatermarkMessage::random(spec.message_len, spec.seed);
}

int cmd_gen_data(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    fs::create_directories(c.out_dir);
    data::DatasetBundle base = data::make_synthetic(spec.data_cfg, spec.seed);
    data::DatasetBundle splits;
    switch (spec.forget_mode) {
        case harness::ForgetMode::Random:
            splits = data::split_random(base, spec.forget_ratio, spec.seed);
            break;
        case harness::ForgetMode::Class:
            splits = data::split_class(base, spec.forget_class);
            break;
        case harness::ForgetMode::WorstCase: {
            // worst-case ranking needs the original model
            std::string theta_path = art(c, "theta_o.w4mu");
            require_artifact(theta_path, "train");
            ParamSet theta_o = harness::load_checkpoint_set(theta_path, "theta");
            splits = data::split_worst_case(base, theta_o, spec.forget_ratio);
            break;
        }
    }
    data::save_csv(splits, art(c, "dataset.csv"));
    say(c, "wrote " + art(c, "dataset.csv"));
    return 0;
}

int cmd_train(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    fs::create_directories(c.out_dir);
    // train on the full synthetic training set, independent of any split
    data::DatasetBundle base = data::make_synthetic(spec.data_cfg, spec.seed);
    ParamSet theta = mu::train_original(classifier_arch(spec), data::train_set(base),
                                        spec.train_epochs, spec.train_lr, spec.train_batch,
                                        spec.seed);
    harness::save_checkpoint({theta}, art(c, "theta_o.w4mu"));
    say(c, "wrote " + art(c, "theta_o.w4mu"));
    return 0;
}

int cmd_train_wm(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    data::DatasetBundle splits = load_dataset(c);
    wm::WatermarkMessage m = wm::WatermarkMessage::random(spec.message_len, spec.seed);
    ParamSet psi0 = nets::init_params(encoder_arch(spec), spec.seed);
    ParamSet phi0 = nets::init_params(decoder_arch(spec), spec.seed + 1);
    wm::WmTrainResult r = wm::train_watermark(psi0, phi0, data::train_set(splits).x, m,
                                              spec.wm_cfg, spec.strength);
    harness::save_checkpoint({r.psi, r.phi}, art(c, "codec.w4mu"));
    say(c, "wrote " + art(c, "codec.w4mu") + " (final loss " +
               std::to_string(r.history.empty() ? 0.0 : r.history.back()) + ")");
    return 0;
}

int cmd_water4mu(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    data::DatasetBundle splits = load_dataset(c);
    std::string theta_path = art(c, "theta_o.w4mu");
    require_artifact(theta_path, "train");
    std::string codec_path = art(c, "codec.w4mu");
    require_artifact(codec_path, "train-wm");
    ParamSet theta_o = harness::load_checkpoint_set(theta_path, "theta");
    ParamSet psi = harness::load_checkpoint_set(codec_path, "psi");
    ParamSet phi = harness::load_checkpoint_set(codec_path, "phi");
    wm::WatermarkMessage m = load_or_default_message(c, spec);
    blo::TrainResult r =
        blo::water4mu_train(theta_o, splits, psi, phi, m, spec.strength, spec.blo_cfg);
    harness::save_checkpoint({r.psi, r.phi}, codec_path);
    say(c, "refined " + codec_path + " (upper objective " +
               std::to_string(r.trace.empty() ? 0.0 : r.trace.back().upper_objective) + ")");
    return 0;
}

int cmd_select_message(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    data::DatasetBundle splits = load_dataset(c);
    std::string theta_path = art(c, "theta_o.w4mu");
    require_artifact(theta_path, "train");
    std::string codec_path = art(c, "codec.w4mu");
    require_artifact(codec_path, "train-wm");
    ParamSet theta_o = harness::load_checkpoint_set(theta_path, "theta");
    ParamSet psi = harness::load_checkpoint_set(codec_path, "psi");
    ParamSet phi = harness::load_checkpoint_set(codec_path, "phi");
    wm::WatermarkMessage m0 = wm::WatermarkMessage::random(spec.message_len, spec.seed);
    std::vector<double> z0(spec.message_len);
    for (std::size_t i = 0; i < z0.size(); ++i) z0[i] = m0.bits[i] ? 2.0 : -2.0;
    blo::MessageSelectResult r =
        blo::message_select(psi, phi, theta_o, splits, z0, spec.strength, spec.blo_cfg);
    harness::save_checkpoint({message_to_set(r.message)}, art(c, "message.w4mu"));
    say(c, "wrote " + art(c, "message.w4mu"));
    return 0;
}

int cmd_unlearn(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    data::DatasetBundle splits = load_dataset(c);
    std::string theta_path = art(c, "theta_o.w4mu");
    require_artifact(theta_path, "train");
    ParamSet theta_o = harness::load_checkpoint_set(theta_path, "theta");

    data::DatasetBundle work = splits;
    if (spec.scenario == harness::Scenario::S2) {
        std::string codec_path = art(c, "codec.w4mu");
        require_artifact(codec_path, "train-wm");
        ParamSet psi = harness::load_checkpoint_set(codec_path, "psi");
        wm::WatermarkMessage m = load_or_default_message(c, spec);
        work = wm::embed_dataset(psi, splits, m.as_real(), spec.strength,
                                 wm::Subset::Forget | wm::Subset::Retain);
    }

    data::LabeledSet forget = data::forget_set(work);
    data::LabeledSet retain = data::retain_set(work);
    mu::MuConfig cfg;
    cfg.epochs = spec.resolved_epochs();
    cfg.lr = spec.resolved_lr();
    cfg.batch_size = spec.unlearn_batch;
    cfg.seed = spec.seed;
    ParamSet theta_u;
    switch (spec.method) {
        case harness::Method::Retrain:
            theta_u = mu::retrain(classifier_arch(spec), retain, spec.train_epochs, spec.train_lr,
                                  spec.train_batch, spec.seed);
            break;
        case harness::Method::Ga:
            cfg.lambda_f = 1.0;
            cfg.lambda_r = 0.0;
            theta_u = mu::unlearn_gd(theta_o, forget, retain, cfg);
            break;
        case harness::Method::Ft:
            cfg.lambda_f = 0.0;
            cfg.lambda_r = 1.0;
            theta_u = mu::unlearn_gd(theta_o, forget, retain, cfg);
            break;
        case harness::Method::GradDiff:
            theta_u = mu::unlearn_gd(theta_o, forget, retain, cfg);
            break;
        case harness::Method::Sparse:
            cfg.sparse_gamma = spec.sparse_gamma;
            theta_u = mu::unlearn_sparse(theta_o, retain, cfg);
            break;
        case harness::Method::Iu:
            cfg.iu_alpha = spec.iu_alpha;
            theta_u = mu::unlearn_iu(theta_o, forget, data::train_set(work), cfg);
            break;
    }
    theta_u.name = "theta";
    harness::save_checkpoint({theta_u}, art(c, "theta_u.w4mu"));
    say(c, "wrote " + art(c, "theta_u.w4mu"));
    return 0;
}

int cmd_eval(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    data::DatasetBundle splits = load_dataset(c);
    std::string theta_path = art(c, "theta_u.w4mu");
    require_artifact(theta_path, "unlearn");
    ParamSet theta_u = harness::load_checkpoint_set(theta_path, "theta");

    data::DatasetBundle eval_bundle = splits;
    double ber = 0.0, psnr_db = 99.0;
    std::string codec_path = art(c, "codec.w4mu");
    if (fs::exists(codec_path)) {
        ParamSet psi = harness::load_checkpoint_set(codec_path, "psi");
        ParamSet phi = harness::load_checkpoint_set(codec_path, "phi");
        wm::WatermarkMessage m = load_or_default_message(c, spec);
        if (spec.scenario == harness::Scenario::S1)
            eval_bundle =
                wm::embed_dataset(psi, splits, m.as_real(), spec.strength,
                                  wm::Subset::Forget | wm::Subset::Retain | wm::Subset::Test);
        data::LabeledSet clean_test = data::test_set(splits);
        Tensor test_w = nets::encode(psi, clean_test.x, m.as_real(), spec.strength);
        psnr_db = wm::psnr(clean_test.x, test_w);
        ber = wm::ber_over(psi, phi, clean_test.x, m, spec.strength);
    }

    data::LabeledSet forget = data::forget_set(eval_bundle);
    data::LabeledSet retain = data::retain_set(eval_bundle);
    data::LabeledSet test = data::test_set(eval_bundle);
    std::string run_id = harness::to_string(spec.scenario) + "-" +
                         harness::to_string(spec.method) + "-seed" + std::to_string(spec.seed);
    eval::MetricsReport r = eval::build_report(
        run_id, harness::to_string(spec.scenario), harness::to_string(spec.method), spec.seed,
        eval::ua(theta_u, forget), eval::mia_efficacy(theta_u, forget, retain, test, spec.seed),
        eval::accuracy(theta_u, retain), eval::accuracy(theta_u, test), ber, psnr_db, 0.0);
    std::string path = art(c, "metrics.csv");
    std::ofstream out(path);
    if (!out) throw IoError("eval: cannot write '" + path + "'");
    out << eval::csv_header() << "\n" << eval::to_csv_row(r) << "\n";
    say(c, eval::csv_header());
    say(c, eval::to_csv_row(r));
    return 0;
}

int cmd_scenario(const Common& c) {
    harness::ScenarioSpec spec = load_spec(c);
    eval::MetricsReport r = harness::run_scenario_to(spec, c.out_dir);
    say(c, eval::csv_header());
    say(c, eval::to_csv_row(r));
    return 0;
}

int cmd_sweep(const Common& c, const std::vector<double>& lambdas, bool serial) {
    harness::ScenarioSpec spec = load_spec(c);
    std::vector<eval::MetricsReport> rows = harness::sweep_lambda(lambdas, spec, !serial);
    fs::create_directories(c.out_dir);
    std::string path = art(c, "sweep.csv");
    std::ofstream out(path);
    if (!out) throw IoError("sweep: cannot write '" + path + "'");
    out << harness::reports_to_csv(rows);
    say(c, "wrote " + path + " (" + std::to_string(rows.size()) + " rows)");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"w4mu — watermark-aware machine unlearning lab"};
    app.require_subcommand(1);

    Common c;
    std::vector<double> lambdas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    bool serial = false;

    CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset CSV");
    CLI::App* train = app.add_subcommand("train", "Train the original classifier");
    CLI::App* train_wm = app.add_subcommand("train-wm", "Pre-train the watermark codec");
    CLI::App* w4 = app.add_subcommand("water4mu", "Refine the codec with the bi-level solver");
    CLI::App* sel = app.add_subcommand("select-message", "Optimize the watermark message");
    CLI::App* unl = app.add_subcommand("unlearn", "Apply the configured unlearning method");
    CLI::App* evalc = app.add_subcommand("eval", "Evaluate the unlearned model");
    CLI::App* scen = app.add_subcommand("scenario", "Run one scenario end to end");
    CLI::App* sweep = app.add_subcommand("sweep", "S2 runs across lambda values");
    for (CLI::App* cmd : {gen, train, train_wm, w4, sel, unl, evalc, scen, sweep})
        add_common(cmd, c);
    sweep->add_option("--lambdas", lambdas, "Lambda values to sweep")->capture_default_str();
    sweep->add_flag("--serial", serial, "Disable parallel workers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(c);
        if (train->parsed()) return cmd_train(c);
        if (train_wm->parsed()) return cmd_train_wm(c);
        if (w4->parsed()) return cmd_water4mu(c);
        if (sel->parsed()) return cmd_select_message(c);
        if (unl->parsed()) return cmd_unlearn(c);
        if (evalc->parsed()) return cmd_eval(c);
        if (scen->parsed()) return cmd_scenario(c);
        if (sweep->parsed()) return cmd_sweep(c, lambdas, serial);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
