#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "w4mu/checkpoint.hpp"
#include "w4mu/scenario.hpp"

using namespace w4mu;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const char* name) { return (fs::temp_directory_path() / name).string(); }

ParamSet sample_set(const char* name, std::uint64_t seed) {
    nets::ArchSpec arch{nets::ArchKind::Classifier, 5, {4}, 3};
    ParamSet p = nets::init_params(arch, seed);
    p.name = name;
    return p;
}

harness::ScenarioSpec tiny_spec() {
    harness::ScenarioSpec spec;
    spec.data_cfg.n_train = 48;
    spec.data_cfg.n_test = 16;
    spec.data_cfg.dim = 6;
    spec.data_cfg.n_classes = 2;
    spec.data_cfg.noise_sigma = 0.4;
    spec.train_epochs = 10;
    spec.wm_cfg.epochs = 10;
    spec.timing = false;
    spec.seed = 3;
    spec.wm_cfg.seed = 3;
    spec.blo_cfg.seed = 3;
    return spec;
}

}  // namespace

TEST_CASE("checkpoint round trip is bitwise exact") {
    std::string path = tmp_path("w4mu_ckpt.w4mu");
    ParamSet a = sample_set("theta", 1);
    ParamSet b = sample_set("psi", 2);
    harness::save_checkpoint({a, b}, path);
    std::vector<ParamSet> loaded = harness::load_checkpoint(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].name == "theta");
    CHECK(flatten(loaded[0]) == flatten(a));
    CHECK(flatten(loaded[1]) == flatten(b));
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        CHECK(loaded[0].entries[i].first == a.entries[i].first);

    ParamSet via_named = harness::load_checkpoint_set(path, "psi");
    CHECK(flatten(via_named) == flatten(b));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint load reproduces identical classify outputs") {
    std::string path = tmp_path("w4mu_ckpt2.w4mu");
    ParamSet theta = sample_set("theta", 9);
    harness::save_checkpoint({theta}, path);
    ParamSet loaded = harness::load_checkpoint_set(path, "theta");
    Tensor x = Tensor::zeros({3, 5});
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = 0.1 * double(i % 7);
    CHECK(nets::classify(theta, x).data == nets::classify(loaded, x).data);
    std::remove(path.c_str());
}

TEST_CASE("corrupted magic is a format error; truncation an io error") {
    std::string path = tmp_path("w4mu_ckpt3.w4mu");
    harness::save_checkpoint({sample_set("theta", 1)}, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS((void)harness::load_checkpoint(path), ParseError);

    harness::save_checkpoint({sample_set("theta", 1)}, path);
    auto size = fs::file_size(path);
    fs::resize_file(path, size - 9);
    CHECK_THROWS_AS((void)harness::load_checkpoint(path), IoError);
    std::remove(path.c_str());
}

TEST_CASE("empty config text resolves to the documented defaults") {
    harness::ScenarioSpec spec = harness::parse_config_text("");
    CHECK(spec.blo_cfg.upper_lr == 1e-4);
    CHECK(spec.blo_cfg.upper_epochs == 10);
    CHECK(spec.blo_cfg.lower_epochs == 3);
    CHECK(spec.blo_cfg.lower_lr == 1e-2);
    CHECK(spec.blo_cfg.lambda_diag == 1e-2);
    CHECK(spec.blo_cfg.msg_lr == 1e-3);
    CHECK(spec.blo_cfg.msg_epochs == 20);
    CHECK(spec.blo_cfg.msg_lambda == 1e-3);
    CHECK(spec.message_len == 10);
    CHECK(spec.strength == 0.1);
    CHECK(spec.data_cfg.n_train == 1024);
    CHECK(spec.scenario == harness::Scenario::S0);
}

TEST_CASE("config errors carry line numbers") {
    auto msg_of = [](const char* text) {
        try {
            (void)harness::parse_config_text(text, "test.ini");
            return std::string("no error");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
    };
    CHECK(msg_of("[run]\nbogus_key = 1\n").find("test.ini:2") != std::string::npos);
    CHECK(msg_of("[run]\nseed = 1\nseed = 2\n").find(":3") != std::string::npos);
    CHECK(msg_of("[train]\nlr = fast\n").find(":2") != std::string::npos);
    CHECK_THROWS_AS((void)harness::parse_config_text("[blo]\nlambda_diag = 0\n"), ValidationError);
}

TEST_CASE("resolved config re-parses to an equal hash") {
    harness::ScenarioSpec spec = harness::parse_config_text(
        "[run]\nscenario = S2\nuse_water4mu = true\nseed = 5\n[data]\nnoise_sigma = 0.5\n");
    harness::ScenarioSpec back = harness::parse_config_text(spec.resolved_ini());
    CHECK(back.config_hash() == spec.config_hash());
    CHECK(harness::parse_config_text("").config_hash() !=
          spec.config_hash());
}

TEST_CASE("message selection outside S2 is rejected") {
    harness::ScenarioSpec spec;
    spec.use_message_selection = true;
    spec.use_water4mu = true;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("scenario rerun yields identical csv rows") {
    harness::ScenarioSpec spec = tiny_spec();
    eval::MetricsReport a = harness::run_scenario(spec);
    eval::MetricsReport b = harness::run_scenario(spec);
    CHECK(eval::to_csv_row(a) == eval::to_csv_row(b));
}

TEST_CASE("single-element sweep equals run_scenario") {
    harness::ScenarioSpec spec = tiny_spec();
    spec.scenario = harness::Scenario::S2;
    spec.use_water4mu = true;
    spec.blo_cfg.upper_epochs = 2;
    std::vector<eval::MetricsReport> rows = harness::sweep_lambda({1e-2}, spec, false);
    REQUIRE(rows.size() == 1);
    harness::ScenarioSpec one = spec;
    one.blo_cfg.lambda_diag = 1e-2;
    CHECK(eval::to_csv_row(rows[0]) == eval::to_csv_row(harness::run_scenario(one)));
}

TEST_CASE("sweep emits one sorted row per lambda regardless of workers") {
    harness::ScenarioSpec spec = tiny_spec();
    spec.blo_cfg.upper_epochs = 1;
    std::vector<double> lambdas = {1e-1, 1e-3, 1e-2};
    std::vector<eval::MetricsReport> par = harness::sweep_lambda(lambdas, spec, true);
    std::vector<eval::MetricsReport> ser = harness::sweep_lambda(lambdas, spec, false);
    REQUIRE(par.size() == 3);
    CHECK(harness::reports_to_csv(par) == harness::reports_to_csv(ser));
    CHECK_THROWS_AS((void)harness::sweep_lambda({}, spec, false), ValidationError);
}

TEST_CASE("run_scenario_full artifacts agree with the report") {
    harness::ScenarioSpec spec = tiny_spec();
    harness::RunArtifacts art = harness::run_scenario_full(spec);
    CHECK(art.report.ua == eval::ua(art.theta_u, data::forget_set(art.splits)));
    CHECK(flatten(art.theta_u) != flatten(art.theta_o));
    CHECK(art.message.bits.size() == spec.message_len);
}

TEST_CASE("run_scenario_to writes metrics and a resolved config snapshot") {
    harness::ScenarioSpec spec = tiny_spec();
    std::string dir = tmp_path("w4mu_run_out");
    eval::MetricsReport r = harness::run_scenario_to(spec, dir);
    std::ifstream metrics(dir + "/metrics.csv");
    REQUIRE(metrics.good());
    std::string header, row;
    std::getline(metrics, header);
    std::getline(metrics, row);
    CHECK(header == eval::csv_header());
    CHECK(row == eval::to_csv_row(r));
    std::ifstream snap(dir + "/resolved_config.ini");
    REQUIRE(snap.good());
    std::string text((std::istreambuf_iterator<char>(snap)), std::istreambuf_iterator<char>());
    CHECK(harness::parse_config_text(text).config_hash() == spec.config_hash());
    fs::remove_all(dir);
}
