#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "predo/config.hpp"
#include "predo/error.hpp"

using namespace predo;
namespace fs = std::filesystem;

namespace {

std::optional<std::string> no_env(const std::string&) { return std::nullopt; }

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
    const auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::missing_file;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty text gives the defaults") {
    const auto cfg = parse_run_config("", {}, no_env);
    CHECK(cfg.strategy.kind == prompting::StrategyKind::bag_of_words);
    CHECK(cfg.strategy.reference_adjective == "fast");
    CHECK(cfg.strategy.reference_noun == "wing");
    CHECK(cfg.optimizer.dimension == 2);
    CHECK(cfg.optimizer.population_size == 10);
    CHECK(cfg.optimizer.parent_count == 3);
    CHECK(cfg.optimizer.max_generations == 100);
    CHECK(cfg.optimizer.initial_step == 0.2);
    CHECK(cfg.optimizer.initial_mean == Eigen::VectorXd::Constant(2, 0.5));
    CHECK(cfg.alpha == 1.0);
    CHECK(cfg.target_prompt == "a car");
    CHECK(cfg.objective == ObjectiveKind::frontal_area);
    CHECK(cfg.axis == geometry::Axis::x);
    CHECK(cfg.endpoints.generator == "mock");
    CHECK(cfg.baseline_path == fs::path("predo-run") / "baseline.txt");
    CHECK_FALSE(cfg.baseline);
    CHECK(cfg.calibration.n == 300);
  }

  TEST_CASE("token strategy derives the genome dimension") {
    const auto cfg = parse_run_config("[strategy]\nkind = tokenization\n", {}, no_env);
    CHECK(cfg.optimizer.dimension == 256);
    CHECK(cfg.optimizer.initial_mean == Eigen::VectorXd::Zero(256));
    const auto small = parse_run_config("[strategy]\nkind = tokens\ntokens = 3\nlatent_dim = 2\n", {}, no_env);
    CHECK(small.optimizer.dimension == 6);
  }

  TEST_CASE("full file") {
    const std::string text = R"(# comment
[strategy]
kind = bag_of_words
reference_adjective = swift
reference_noun = fish
wordnet = ../wn

[optimizer]
population = 12
parents = 4
max_generations = 50
initial_step = 0.3
initial_mean = 0.1, 0.9
min_improvement = 1e-4

[objective]
alpha = 0
axis = z
area_resolution = 256
practical_threshold = 0.7
target_prompt = a sports car

[endpoints]
generator = http://gen:8000
scorer = http://score:8001
timeout = 30
retries = 5
auth_token = tok
parallelism = 2

[mock]
hallucination_rate_base = 0.1
rare_token_boost = 0.8

[render]
azimuth = 45
resolution = 128

[calibration]
n = 50
prompt = A sedan

[run]
seed = 17
output_dir = out
write_artifacts = false
)";
    const auto cfg = parse_run_config(text, "/base/dir", no_env);
    CHECK(cfg.strategy.reference_adjective == "swift");
    CHECK(cfg.strategy.reference_noun == "fish");
    CHECK(cfg.wordnet_dir == fs::path("/base/dir/../wn"));
    CHECK(cfg.optimizer.population_size == 12);
    CHECK(cfg.optimizer.parent_count == 4);
    CHECK(cfg.optimizer.max_generations == 50);
    CHECK(cfg.optimizer.initial_step == 0.3);
    CHECK(cfg.optimizer.initial_mean[0] == 0.1);
    CHECK(cfg.optimizer.initial_mean[1] == 0.9);
    CHECK(cfg.optimizer.min_improvement == 1e-4);
    CHECK(cfg.optimizer.seed == 17);
    CHECK(cfg.alpha == 0.0);
    CHECK(cfg.axis == geometry::Axis::z);
    CHECK(cfg.area_resolution == 256);
    CHECK(cfg.practical_threshold == 0.7);
    CHECK(cfg.target_prompt == "a sports car");
    CHECK(cfg.endpoints.generator == "http://gen:8000");
    CHECK(cfg.endpoints.timeout_seconds == 30.0);
    CHECK(cfg.endpoints.retries == 5);
    CHECK(cfg.endpoints.auth_token == "tok");
    CHECK(cfg.endpoints.parallelism == 2);
    CHECK(cfg.mock.hallucination_rate_base == 0.1);
    CHECK(cfg.mock.seed == 17);
    CHECK(cfg.view.azimuth_deg == 45.0);
    CHECK(cfg.view.elevation_deg == 20.0);
    CHECK(cfg.view.resolution == 128);
    CHECK(cfg.calibration.n == 50);
    CHECK(cfg.calibration.prompt == "A sedan");
    CHECK(cfg.calibration.seed == 17);
    CHECK(cfg.strategy.projector_seed == 17);
    CHECK(cfg.output_dir == fs::path("/base/dir/out"));
    CHECK(cfg.baseline_path == fs::path("/base/dir/out/baseline.txt"));
    CHECK_FALSE(cfg.write_artifacts);

    const auto ep = cfg.endpoints.endpoint(cfg.endpoints.scorer);
    CHECK(ep.base_url == "http://score:8001");
    CHECK(ep.retries == 5);
    CHECK(ep.auth_token == "tok");
  }

  TEST_CASE("absolute paths are kept") {
    const auto cfg = parse_run_config("[strategy]\nvocab = /v/cl100k.tiktoken\n", "/base", no_env);
    CHECK(cfg.vocab_path == fs::path("/v/cl100k.tiktoken"));
  }

  TEST_CASE("unknown sections and keys are rejected") {
    CHECK(code_of([] { parse_run_config("[strategy]\nkinds = bow\n", {}, no_env); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_run_config("[extras]\nx = 1\n", {}, no_env); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_run_config("seed = 1\n", {}, no_env); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_run_config("[strategy\n", {}, no_env); }) == ErrorCode::invalid_config);
  }

  TEST_CASE("bad values are rejected") {
    const char* cases[] = {
        "[strategy]\nkind = grammar\n",
        "[optimizer]\npopulation = ten\n",
        "[optimizer]\npopulation = 2\nparents = 3\n",
        "[optimizer]\ninitial_mean = 0.1, 0.2, 0.3\n",
        "[objective]\nalpha = -1\n",
        "[objective]\npractical_threshold = 1.5\n",
        "[objective]\naxis = w\n",
        "[objective]\narea_resolution = 4\n",
        "[objective]\nkind = drag\n",
        "[objective]\nkind = external\n",
        "[objective]\nbaseline_min = 1\n",
        "[objective]\nbaseline_min = 1\nbaseline_max = 1\n",
        "[endpoints]\nparallelism = 0\n",
        "[run]\nwrite_artifacts = maybe\n",
        "[run]\nseed = -3\n",
        "[calibration]\nn = 1\n",
    };
    for (const char* text : cases) {
      CAPTURE(text);
      CHECK(code_of([&] { parse_run_config(text, {}, no_env); }) == ErrorCode::invalid_config);
    }
  }

  TEST_CASE("the optimizer dimension must match the strategy") {
    auto cfg = parse_run_config("", {}, no_env);
    cfg.strategy.kind = prompting::StrategyKind::tokenization;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::invalid_config);
    cfg.optimizer.dimension = 256;
    cfg.optimizer.initial_mean = Eigen::VectorXd::Zero(256);
    cfg.validate();
  }

  TEST_CASE("external objective with an evaluator URL") {
    const auto cfg = parse_run_config("[objective]\nkind = external\n[endpoints]\nevaluator = http://cfd:9000\n", {},
                                      no_env);
    CHECK(cfg.objective == ObjectiveKind::external);
    CHECK(to_string(cfg.objective) == "external");
  }

  TEST_CASE("inline baseline") {
    const auto cfg = parse_run_config("[objective]\nbaseline_min = 0.2\nbaseline_max = 0.7\n", {}, no_env);
    REQUIRE(cfg.baseline);
    CHECK(cfg.baseline->min == 0.2);
    CHECK(cfg.baseline->max == 0.7);
    CHECK(cfg.baseline->denominator == 0.7 - 0.2);
  }

  TEST_CASE("environment overrides win over the file") {
    const auto env = env_of({{"PREDO_OPTIMIZER_MAX_GENERATIONS", "7"},
                             {"PREDO_OBJECTIVE_ALPHA", "2.5"},
                             {"PREDO_ENDPOINTS_AUTH_TOKEN", "from-env"},
                             {"PREDO_STRATEGY_KIND", "tokens"}});
    const auto cfg = parse_run_config("[optimizer]\nmax_generations = 100\n", {}, env);
    CHECK(cfg.optimizer.max_generations == 7);
    CHECK(cfg.alpha == 2.5);
    CHECK(cfg.endpoints.auth_token == "from-env");
    CHECK(cfg.optimizer.dimension == 256);
    CHECK(code_of([] { parse_run_config("", {}, env_of({{"PREDO_RUN_SEED", "x"}})); }) ==
          ErrorCode::invalid_config);
  }

  TEST_CASE("load from file resolves against its directory") {
    const auto dir = fs::temp_directory_path() / "predo-config-test";
    fs::create_directories(dir);
    std::ofstream(dir / "run.ini") << "[run]\noutput_dir = results\n";
    const auto cfg = load_run_config(dir / "run.ini", no_env);
    CHECK(cfg.output_dir == dir / "results");
    CHECK(code_of([&] { load_run_config(dir / "missing.ini", no_env); }) == ErrorCode::invalid_config);
    fs::remove_all(dir);
  }
}
