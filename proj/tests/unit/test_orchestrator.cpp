#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "predo/digest.hpp"
#include "predo/error.hpp"
#include "predo/orchestrator.hpp"

using namespace predo;
namespace fs = std::filesystem;

namespace {

std::optional<std::string> no_env(const std::string&) { return std::nullopt; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("predo-orch-" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig mock_config(const fs::path& out, int generations = 20, std::uint64_t seed = 3) {
  std::ostringstream text;
  text << "[strategy]\nwordnet = " << oracle::fixture("wordnet-mini") << "\n"
       << "[optimizer]\nmax_generations = " << generations << "\n"
       << "[objective]\nbaseline_min = 0.1\nbaseline_max = 0.6\narea_resolution = 96\n"
       << "[render]\nresolution = 48\n"
       << "[run]\nseed = " << seed << "\noutput_dir = " << out.string() << "\n";
  return parse_run_config(text.str(), {}, no_env);
}

MemberRecord member(double g, std::optional<bool> truth = std::nullopt, bool failed = false) {
  MemberRecord m;
  m.score.g = g;
  m.score.practical = g >= 0.5;
  m.ground_truth = truth;
  m.failed = failed;
  return m;
}

GenerationLog generation_of(std::vector<MemberRecord> members) {
  GenerationLog g;
  g.members = std::move(members);
  fill_aggregates(g);
  return g;
}

// Fails prompts whose digest falls in one residue class; the rest go to the mock.
class PartlyFailingGenerator final : public services::Generator {
 public:
  explicit PartlyFailingGenerator(std::uint64_t modulus) : modulus_(modulus) {}
  services::GenerationResult generate(std::string_view prompt, std::uint64_t seed) override {
    if (Fnv1a64().update(prompt).value() % modulus_ == 0) throw Error(ErrorCode::generation_failed, "refused");
    return services::mock_generate({}, prompt, seed);
  }

 private:
  std::uint64_t modulus_;
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_config;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("generation accuracy") {
    std::vector<MemberRecord> nine_of_ten(9, member(0.9));
    nine_of_ten.push_back(member(0.1));
    CHECK(generation_accuracy(generation_of(nine_of_ten)) == 0.9);

    // Ground truth wins over the thresholded score when every member has it.
    std::vector<MemberRecord> labelled = {member(0.9, false), member(0.1, true), member(0.2, true)};
    CHECK(generation_accuracy(generation_of(labelled)) == doctest::Approx(2.0 / 3.0));
    labelled[0].ground_truth.reset();
    CHECK(generation_accuracy(generation_of(labelled)) == doctest::Approx(1.0 / 3.0));

    // Failed members count as impractical and do not block ground truth use.
    std::vector<MemberRecord> with_failure = {member(0.0, true), member(0.0, std::nullopt, true)};
    CHECK(generation_accuracy(generation_of(with_failure)) == 0.5);
    CHECK(generation_accuracy(GenerationLog{}) == 0.0);
  }

  TEST_CASE("accuracy metrics across generations") {
    auto at = [](int practical) {
      std::vector<MemberRecord> ms;
      for (int i = 0; i < 10; ++i) ms.push_back(member(i < practical ? 1.0 : 0.0));
      return generation_of(ms);
    };
    const std::vector<GenerationLog> mixed = {at(2), at(4)};
    const auto m = accuracy_metrics(mixed);
    CHECK(m.overall_mean == doctest::Approx(0.3));
    CHECK(m.overall_std == doctest::Approx(0.1));
    CHECK(m.gen_final == 0.4);

    const std::vector<GenerationLog> perfect = {at(10), at(10), at(10)};
    const auto p = accuracy_metrics(perfect);
    CHECK(p.overall_mean == 1.0);
    CHECK(p.overall_std == 0.0);
    CHECK(accuracy_metrics({}).overall_mean == 0.0);
  }

  TEST_CASE("aggregates skip failed members") {
    auto ok = member(1.0);
    ok.score.f_score = 0.4;
    ok.score.s_penalty = 0.1;
    ok.score.f_hat = 0.5;
    auto bad = member(0.0, std::nullopt, true);
    bad.score.f_hat = 1e6;
    const auto g = generation_of({ok, bad});
    CHECK(g.best_f_hat == 0.5);
    CHECK(g.mean_f_score == 0.4);
    CHECK(g.mean_s_penalty == 0.1);
    CHECK(g.failed == 1);
    CHECK(g.accuracy == 0.5);
  }

  TEST_CASE("generation log JSON round trip") {
    auto m = member(0.25, true);
    m.genome = {0.1, 1.0 / 3.0};
    m.prompt = "A fast car in the shape of wing";
    m.token_ranks = {3, 1};
    m.score.f_hat = 2.0 / 7.0;
    m.mesh_file = "gen_0/member_0.obj";
    auto log = generation_of({m, member(0.0, std::nullopt, true)});
    log.generation = 4;
    const auto back = generation_from_json(to_json(log));
    CHECK(to_json(back) == to_json(log));
    CHECK(back.members[0].genome == m.genome);
    CHECK(back.members[0].score.f_hat == m.score.f_hat);
    CHECK(back.members[0].ground_truth == true);
    CHECK_FALSE(back.members[1].ground_truth);
    CHECK(code_of([] { generation_from_json("{"); }) == ErrorCode::parse_error);
  }

  TEST_CASE("mock run writes per-generation logs and a report") {
    const auto dir = scratch("basic");
    const auto cfg = mock_config(dir);
    const auto rep = run(cfg);
    REQUIRE(rep.generations.size() == 20);
    CHECK(rep.stop_reason == "max-generations");
    for (int k = 0; k < 20; ++k) {
      const auto& g = rep.generations[static_cast<std::size_t>(k)];
      CHECK(g.generation == k);
      CHECK(g.members.size() == 10);
      for (const auto& mb : g.members) {
        CHECK_FALSE(mb.failed);
        CHECK(mb.score.f_hat == mb.score.f_score + cfg.alpha * mb.score.s_penalty);
        CHECK(mb.score.f_score == mb.score.s_design / cfg.baseline->denominator);
        CHECK(mb.prompt.starts_with("A "));
        CHECK(fs::exists(dir / mb.mesh_file));
        CHECK(fs::exists(dir / mb.render_file));
      }
    }
    CHECK(fs::exists(dir / "checkpoint.json"));
    CHECK(fs::exists(dir / "runtime.json"));

    const auto files = report(dir);
    const auto csv = slurp(files.csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
    CHECK(csv.starts_with("generation,best_f_hat,mean_f_score,mean_s_penalty,accuracy,failed\n"));
    CHECK(fs::exists(files.logs));
    CHECK(fs::exists(files.gallery));
    CHECK(slurp(files.summary).find("\"final_accuracy\"") != std::string::npos);
  }

  TEST_CASE("the optimizer is told the penalized score") {
    const auto dir = scratch("replay");
    auto cfg = mock_config(dir, 6);
    cfg.write_artifacts = false;
    run(cfg);
    const auto logs = read_logs(dir);
    REQUIRE(logs.size() == 6);
    auto state = optimizer::cma_init(cfg.optimizer);
    for (const auto& g : logs) {
      const auto pop = optimizer::cma_ask(state, cfg.optimizer);
      REQUIRE(pop.size() == g.members.size());
      std::vector<double> fitness;
      for (std::size_t i = 0; i < pop.size(); ++i) {
        const std::vector<double> x(pop[i].data(), pop[i].data() + pop[i].size());
        CHECK(x == g.members[i].genome);
        fitness.push_back(g.members[i].score.f_hat);
      }
      optimizer::cma_tell(state, cfg.optimizer, pop, fitness);
    }
  }

  TEST_CASE("identical configs give byte-identical logs") {
    const auto a = scratch("det-a"), b = scratch("det-b");
    auto ca = mock_config(a, 8), cb = mock_config(b, 8);
    cb.endpoints.parallelism = 1;
    run(ca);
    run(cb);
    CHECK(slurp(a / "log.jsonl") == slurp(b / "log.jsonl"));
    CHECK(slurp(a / "checkpoint.json") == slurp(b / "checkpoint.json"));
    CHECK(slurp(a / "gen_7/member_3.obj") == slurp(b / "gen_7/member_3.obj"));
    CHECK(slurp(a / "gen_7/member_3.png") == slurp(b / "gen_7/member_3.png"));
    report(a);
    report(b);
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  }

  TEST_CASE("resume after interruption matches an uninterrupted run") {
    const auto full = scratch("full"), part = scratch("part");
    run(mock_config(full, 20));
    RunOptions stop;
    stop.stop_after = 10;
    const auto first = run(mock_config(part, 20), stop);
    CHECK(first.stop_reason == "interrupted");
    CHECK(first.generations.size() == 10);

    // A log line written after the last checkpoint is dropped on resume.
    std::ofstream(part / "log.jsonl", std::ios::app) << to_json(first.generations.back()) << "\n";

    RunOptions resume;
    resume.resume = true;
    const auto second = run(mock_config(part, 20), resume);
    CHECK(second.generations.size() == 20);
    CHECK(slurp(full / "log.jsonl") == slurp(part / "log.jsonl"));
    CHECK(slurp(full / "checkpoint.json") == slurp(part / "checkpoint.json"));
  }

  TEST_CASE("resume refuses a changed configuration") {
    const auto dir = scratch("changed");
    RunOptions stop;
    stop.stop_after = 2;
    run(mock_config(dir, 5), stop);
    auto changed = mock_config(dir, 5);
    changed.alpha = 0.5;
    RunOptions resume;
    resume.resume = true;
    CHECK(code_of([&] { run(changed, resume); }) == ErrorCode::invalid_config);
  }

  TEST_CASE("report is a pure function of the run directory") {
    const auto dir = scratch("report");
    run(mock_config(dir, 3));
    const auto files = report(dir);
    const auto first = slurp(files.summary) + slurp(files.csv) + slurp(files.logs) + slurp(files.gallery) +
                       slurp(files.token_usage);
    fs::remove(files.summary);
    report(dir);
    CHECK(slurp(files.summary) + slurp(files.csv) + slurp(files.logs) + slurp(files.gallery) +
              slurp(files.token_usage) ==
          first);
    CHECK(slurp(files.summary).find("wall") == std::string::npos);
  }

  TEST_CASE("report on a missing or empty run") {
    CHECK(code_of([] { report(scratch("absent")); }) == ErrorCode::missing_run);
    const auto empty = scratch("empty");
    fs::create_directories(empty);
    CHECK(code_of([&] { report(empty); }) == ErrorCode::missing_run);
    std::ofstream(empty / "log.jsonl") << "";
    CHECK(code_of([&] { report(empty); }) == ErrorCode::missing_run);
  }

  TEST_CASE("missing calibration stops the run") {
    const auto dir = scratch("nocal");
    auto cfg = mock_config(dir, 2);
    cfg.baseline.reset();
    CHECK(code_of([&] { run(cfg); }) == ErrorCode::calibration_missing);
  }

  TEST_CASE("failed members get the worst fitness") {
    const auto dir = scratch("partial");
    auto cfg = mock_config(dir, 4);
    cfg.write_artifacts = false;
    RunOptions opts;
    opts.generator = std::make_shared<PartlyFailingGenerator>(3);
    const auto rep = run(cfg, opts);
    int failed = 0;
    for (const auto& g : rep.generations) {
      int here = 0;
      for (const auto& m : g.members) {
        if (!m.failed) continue;
        ++here;
        CHECK(m.score.f_hat == cfg.worst_fitness);
        CHECK(m.error.find("refused") != std::string::npos);
      }
      CHECK(g.failed == here);
      failed += here;
    }
    CHECK(failed > 0);
    CHECK(failed < 40);
  }

  TEST_CASE("a generation where everything fails aborts the run") {
    const auto dir = scratch("abort");
    auto cfg = mock_config(dir, 4);
    cfg.write_artifacts = false;
    RunOptions opts;
    opts.generator = std::make_shared<PartlyFailingGenerator>(1);
    CHECK(code_of([&] { run(cfg, opts); }) == ErrorCode::generation_aborted);
    CHECK(read_logs(dir).size() == 1);
    CHECK_FALSE(fs::exists(dir / "checkpoint.json"));
  }

  TEST_CASE("token strategy run stores the projector and token usage") {
    const auto dir = scratch("tokens");
    std::ostringstream text;
    text << "[strategy]\nkind = tokens\ntokens = 4\nlatent_dim = 3\nvocab = "
         << oracle::fixture("vocab5.tiktoken") << "\n"
         << "[optimizer]\nmax_generations = 3\ninitial_step = 1\n"
         << "[objective]\nbaseline_min = 0.1\nbaseline_max = 0.6\narea_resolution = 64\n"
         << "[render]\nresolution = 32\n[run]\nseed = 4\nwrite_artifacts = false\noutput_dir = " << dir.string()
         << "\n";
    const auto cfg = parse_run_config(text.str(), {}, no_env);
    const auto rep = run(cfg);
    CHECK(fs::exists(dir / "projector.bin"));
    CHECK(rep.token_usage.counts.size() > 0);
    std::size_t total = 0;
    for (const auto& [rank, count] : rep.token_usage.counts) {
      CHECK(rank < 5);
      total += count;
    }
    CHECK(total == 3 * 10 * 4);
    for (const auto& m : rep.generations[0].members) CHECK(m.token_ranks.size() == 4);
    const auto files = report(dir);
    CHECK(slurp(files.token_usage).starts_with("rank,count\n"));
    CHECK(slurp(files.summary).find("\"vocab_size\": 5") != std::string::npos);
  }
}
