#include "predo/orchestrator.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "predo/digest.hpp"
#include "predo/error.hpp"
#include "predo/geometry.hpp"
#include "predo/lexicon.hpp"
#include "predo/optimizer.hpp"

namespace predo {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

std::string dump(const json& doc, int indent = -1) {
  return doc.dump(indent, ' ', false, json::error_handler_t::replace);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::missing_file, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::missing_file, "short write to " + path.string());
}

// Write-then-rename so a crash never leaves a torn checkpoint.
void write_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json config_echo(const RunConfig& cfg, const evaluation::BaselineStats& baseline, std::size_t vocab_size) {
  const auto& o = cfg.optimizer;
  json j;
  j["strategy"] = {{"kind", prompting::to_string(cfg.strategy.kind)},
                   {"reference_adjective", cfg.strategy.reference_adjective},
                   {"reference_noun", cfg.strategy.reference_noun},
                   {"tokens", cfg.strategy.token_count},
                   {"latent_dim", cfg.strategy.latent_dim},
                   {"projector_seed", cfg.strategy.projector_seed},
                   {"wordnet", cfg.wordnet_dir.string()},
                   {"vocab", cfg.vocab_path.string()},
                   {"vocab_size", vocab_size}};
  j["optimizer"] = {{"dimension", o.dimension},
                    {"population", o.population_size},
                    {"parents", o.parent_count},
                    {"max_generations", o.max_generations},
                    {"initial_step", o.initial_step},
                    {"initial_mean", vector_json(o.initial_mean)},
                    {"min_improvement", o.min_improvement},
                    {"seed", o.seed}};
  j["objective"] = {{"kind", to_string(cfg.objective)},
                    {"alpha", cfg.alpha},
                    {"target_prompt", cfg.target_prompt},
                    {"worst_fitness", cfg.worst_fitness},
                    {"practical_threshold", cfg.practical_threshold},
                    {"axis", std::string(1, geometry::to_char(cfg.axis))},
                    {"area_resolution", cfg.area_resolution}};
  j["baseline"] = {{"prompt", baseline.prompt},
                   {"n", baseline.n},
                   {"seed", baseline.seed},
                   {"min", baseline.min},
                   {"max", baseline.max},
                   {"denominator", baseline.denominator},
                   {"samples_digest", to_hex(baseline.samples_digest())}};
  j["endpoints"] = {{"generator", cfg.endpoints.generator},
                    {"scorer", cfg.endpoints.scorer},
                    {"evaluator", cfg.endpoints.evaluator}};
  j["mock"] = {{"hallucination_rate_base", cfg.mock.hallucination_rate_base},
               {"rare_token_boost", cfg.mock.rare_token_boost},
               {"seed", cfg.mock.seed}};
  j["render"] = {{"azimuth", cfg.view.azimuth_deg},
                 {"elevation", cfg.view.elevation_deg},
                 {"resolution", cfg.view.resolution}};
  j["seed"] = cfg.seed;
  return j;
}

json checkpoint_json(const optimizer::CmaState& s) {
  json cov = json::array();
  for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) cov.push_back(vector_json(s.covariance.row(r).transpose()));
  json j{{"version", kCheckpointVersion},
         {"generation", s.generation},
         {"mean", vector_json(s.mean)},
         {"step_size", s.step_size},
         {"covariance", cov},
         {"path_sigma", vector_json(s.path_sigma)},
         {"path_c", vector_json(s.path_c)},
         {"best_history", s.best_history}};
  j["best"] = s.best_so_far ? json{{"genome", vector_json(s.best_so_far->genome)}, {"fitness", s.best_so_far->fitness}}
                            : json(nullptr);
  return j;
}

optimizer::CmaState checkpoint_from(const json& j) {
  if (j.value("version", 0) != kCheckpointVersion) throw Error(ErrorCode::parse_error, "unsupported checkpoint version");
  optimizer::CmaState s;
  s.generation = j.at("generation").get<int>();
  s.mean = vector_from(j.at("mean"));
  s.step_size = j.at("step_size").get<double>();
  const auto& cov = j.at("covariance");
  const auto n = static_cast<Eigen::Index>(cov.size());
  s.covariance.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) s.covariance.row(r) = vector_from(cov.at(r)).transpose();
  s.path_sigma = vector_from(j.at("path_sigma"));
  s.path_c = vector_from(j.at("path_c"));
  s.best_history = j.at("best_history").get<std::vector<double>>();
  if (!j.at("best").is_null())
    s.best_so_far = optimizer::BestRecord{vector_from(j["best"].at("genome")), j["best"].at("fitness").get<double>()};
  return s;
}

json member_json(const MemberRecord& m, std::size_t index) {
  return json{{"index", index},
              {"genome", m.genome},
              {"genome_digest", m.genome_digest},
              {"prompt", m.prompt},
              {"token_ranks", m.token_ranks},
              {"failed", m.failed},
              {"error", m.error},
              {"s_design", m.score.s_design},
              {"g", m.score.g},
              {"s_penalty", m.score.s_penalty},
              {"f_score", m.score.f_score},
              {"f_hat", m.score.f_hat},
              {"alpha", m.score.alpha},
              {"practical", m.score.practical},
              {"ground_truth", m.ground_truth ? json(*m.ground_truth) : json(nullptr)},
              {"mesh_file", m.mesh_file},
              {"render_file", m.render_file}};
}

MemberRecord member_from(const json& j) {
  MemberRecord m;
  m.genome = j.at("genome").get<std::vector<double>>();
  m.genome_digest = j.at("genome_digest").get<std::string>();
  m.prompt = j.at("prompt").get<std::string>();
  m.token_ranks = j.at("token_ranks").get<std::vector<std::size_t>>();
  m.failed = j.at("failed").get<bool>();
  m.error = j.at("error").get<std::string>();
  m.score.s_design = j.at("s_design").get<double>();
  m.score.g = j.at("g").get<double>();
  m.score.s_penalty = j.at("s_penalty").get<double>();
  m.score.f_score = j.at("f_score").get<double>();
  m.score.f_hat = j.at("f_hat").get<double>();
  m.score.alpha = j.at("alpha").get<double>();
  m.score.practical = j.at("practical").get<bool>();
  if (!j.at("ground_truth").is_null()) m.ground_truth = j["ground_truth"].get<bool>();
  m.mesh_file = j.at("mesh_file").get<std::string>();
  m.render_file = j.at("render_file").get<std::string>();
  return m;
}

json generation_json(const GenerationLog& log) {
  json members = json::array();
  for (std::size_t i = 0; i < log.members.size(); ++i) members.push_back(member_json(log.members[i], i));
  return json{{"generation", log.generation},     {"best_f_hat", log.best_f_hat},
              {"mean_f_score", log.mean_f_score}, {"mean_s_penalty", log.mean_s_penalty},
              {"accuracy", log.accuracy},         {"failed", log.failed},
              {"members", members}};
}

GenerationLog generation_from(const json& j) {
  GenerationLog log;
  log.generation = j.at("generation").get<int>();
  for (const auto& m : j.at("members")) log.members.push_back(member_from(m));
  log.best_f_hat = j.at("best_f_hat").get<double>();
  log.mean_f_score = j.at("mean_f_score").get<double>();
  log.mean_s_penalty = j.at("mean_s_penalty").get<double>();
  log.accuracy = j.at("accuracy").get<double>();
  log.failed = j.at("failed").get<int>();
  return log;
}

bool member_practical(const MemberRecord& m, bool use_ground_truth) {
  if (m.failed) return false;
  return use_ground_truth ? m.ground_truth.value_or(false) : m.score.practical;
}

prompting::TokenUsage usage_of(const std::vector<GenerationLog>& logs, std::size_t vocab_size) {
  std::vector<prompting::Prompt> history;
  for (const auto& g : logs)
    for (const auto& m : g.members) {
      prompting::Prompt p;
      p.token_ranks = m.token_ranks;
      history.push_back(std::move(p));
    }
  return prompting::token_usage(history, vocab_size);
}

// Everything a member evaluation needs; shared read-only across workers.
struct Pipeline {
  const RunConfig& cfg;
  const evaluation::BaselineStats& baseline;
  services::Generator& generator;
  services::Scorer& scorer;
  const evaluation::DesignEvaluator& evaluator;
  fs::path run_dir;
};

MemberRecord evaluate_member(const Pipeline& p, int generation, int index, const optimizer::Genome& genome,
                             const prompting::Prompt& prompt) {
  MemberRecord m;
  m.genome.assign(genome.data(), genome.data() + genome.size());
  m.genome_digest = to_hex(digest_doubles(m.genome));
  m.prompt = prompt.text;
  m.token_ranks = prompt.token_ranks;
  m.score.alpha = p.cfg.alpha;
  // One generation seed for the whole run, so a member's fitness depends on its prompt alone.
  const std::uint64_t seed = p.cfg.seed;
  const fs::path gen_dir = "gen_" + std::to_string(generation);
  const std::string stem = "member_" + std::to_string(index);
  try {
    const auto result = p.generator.generate(prompt.text, seed);
    if (p.cfg.write_artifacts) {
      m.mesh_file = (gen_dir / (stem + ".obj")).generic_string();
      write_file(p.run_dir / m.mesh_file, result.mesh_obj);
    }
    const auto mesh = geometry::load_obj(result.mesh_obj).mesh;
    const double s_design = p.evaluator(mesh);
    const auto unit = geometry::normalize(mesh);
    const auto png = geometry::render_preview(unit, p.cfg.view);
    if (p.cfg.write_artifacts) {
      m.render_file = (gen_dir / (stem + ".png")).generic_string();
      write_file(p.run_dir / m.render_file, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
    }
    const double g = p.scorer.score({&unit, png, p.cfg.target_prompt});
    m.score = evaluation::score_design(s_design, g, p.baseline, p.cfg.alpha, p.cfg.practical_threshold);
    if (!std::isfinite(m.score.f_hat)) throw Error(ErrorCode::non_finite_fitness, "penalized score is not finite");
    m.ground_truth = result.ground_truth_practical;
  } catch (const std::exception& e) {
    m.failed = true;
    m.error = e.what();
    m.score = {};
    m.score.alpha = p.cfg.alpha;
    m.score.f_hat = p.cfg.worst_fitness;
    m.ground_truth.reset();
  }
  return m;
}

std::vector<MemberRecord> evaluate_population(const Pipeline& p, int generation,
                                              const std::vector<optimizer::Genome>& genomes,
                                              const std::vector<prompting::Prompt>& prompts) {
  std::vector<MemberRecord> out(genomes.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < genomes.size(); i = next++)
      out[i] = evaluate_member(p, generation, static_cast<int>(i), genomes[i], prompts[i]);
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(p.cfg.endpoints.parallelism), genomes.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return out;
}

}  // namespace

double generation_accuracy(const GenerationLog& log) {
  if (log.members.empty()) return 0.0;
  bool use_ground_truth = false;
  bool all_labelled = true;
  for (const auto& m : log.members) {
    if (m.failed) continue;
    use_ground_truth = true;
    all_labelled = all_labelled && m.ground_truth.has_value();
  }
  use_ground_truth = use_ground_truth && all_labelled;
  std::size_t practical = 0;
  for (const auto& m : log.members) practical += member_practical(m, use_ground_truth) ? 1 : 0;
  return static_cast<double>(practical) / static_cast<double>(log.members.size());
}

void fill_aggregates(GenerationLog& log) {
  log.failed = 0;
  log.best_f_hat = std::numeric_limits<double>::infinity();
  double f_sum = 0.0, p_sum = 0.0;
  int ok = 0;
  for (const auto& m : log.members) {
    log.best_f_hat = std::min(log.best_f_hat, m.score.f_hat);
    if (m.failed) {
      ++log.failed;
      continue;
    }
    f_sum += m.score.f_score;
    p_sum += m.score.s_penalty;
    ++ok;
  }
  log.mean_f_score = ok ? f_sum / ok : 0.0;
  log.mean_s_penalty = ok ? p_sum / ok : 0.0;
  log.accuracy = generation_accuracy(log);
}

AccuracyMetrics accuracy_metrics(std::span<const GenerationLog> logs) {
  AccuracyMetrics m;
  if (logs.empty()) return m;
  double sum = 0.0;
  for (const auto& g : logs) sum += generation_accuracy(g);
  m.overall_mean = sum / static_cast<double>(logs.size());
  double sq = 0.0;
  for (const auto& g : logs) {
    const double d = generation_accuracy(g) - m.overall_mean;
    sq += d * d;
  }
  m.overall_std = std::sqrt(sq / static_cast<double>(logs.size()));
  m.gen_final = generation_accuracy(logs.back());
  return m;
}

std::shared_ptr<services::Generator> make_generator(const RunConfig& cfg) {
  if (cfg.endpoints.generator == "mock") return std::make_shared<services::MockGenerator>(cfg.mock);
  return std::make_shared<services::HttpGenerator>(cfg.endpoints.endpoint(cfg.endpoints.generator));
}

std::shared_ptr<services::Scorer> make_scorer(const RunConfig& cfg) {
  if (cfg.endpoints.scorer == "mock") return std::make_shared<services::MockScorer>();
  return std::make_shared<services::HttpScorer>(cfg.endpoints.endpoint(cfg.endpoints.scorer));
}

evaluation::DesignEvaluator make_evaluator(const RunConfig& cfg) {
  if (cfg.objective == ObjectiveKind::external) {
    auto client = std::make_shared<services::HttpEvaluator>(cfg.endpoints.endpoint(cfg.endpoints.evaluator));
    return [client](const geometry::TriMesh& mesh) { return client->evaluate(mesh); };
  }
  return [res = cfg.area_resolution, axis = cfg.axis](const geometry::TriMesh& mesh) {
    return evaluation::frontal_area_performance(mesh, res, axis);
  };
}

std::string to_json(const GenerationLog& log) { return dump(generation_json(log)); }

GenerationLog generation_from_json(const std::string& line) {
  const json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::parse_error, "generation log is not valid JSON");
  try {
    return generation_from(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("generation log: ") + e.what());
  }
}

std::vector<GenerationLog> read_logs(const fs::path& run_dir) {
  const fs::path path = run_dir / "log.jsonl";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_run, "no generation log in " + run_dir.string());
  std::vector<GenerationLog> logs;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) logs.push_back(generation_from_json(line));
  if (logs.empty()) throw Error(ErrorCode::missing_run, "generation log in " + run_dir.string() + " is empty");
  return logs;
}

RunReport run(const RunConfig& cfg, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const evaluation::BaselineStats baseline =
      cfg.baseline ? *cfg.baseline : evaluation::load_calibration(cfg.baseline_path);

  const auto generator = options.generator ? options.generator : make_generator(cfg);
  const auto scorer = options.scorer ? options.scorer : make_scorer(cfg);
  const auto evaluator = make_evaluator(cfg);

  std::optional<lexicon::Lexicon> lex;
  std::optional<prompting::BowDecoder> bow;
  std::optional<lexicon::VocabTable> vocab;
  std::optional<lexicon::TokenProjector> projector;
  std::size_t vocab_size = 0;
  if (cfg.strategy.kind == prompting::StrategyKind::bag_of_words) {
    lex = lexicon::Lexicon::load_wordnet(cfg.wordnet_dir);
    bow.emplace(*lex, cfg.strategy);
  } else {
    vocab = lexicon::VocabTable::load(cfg.vocab_path);
    vocab_size = vocab->size();
    const fs::path wpath = dir / "projector.bin";
    if (options.resume && fs::exists(wpath)) {
      projector = lexicon::TokenProjector::load(wpath);
      if (projector->seed() != cfg.strategy.projector_seed || projector->latent_dim() != cfg.strategy.latent_dim ||
          projector->vocab_size() != vocab_size)
        throw Error(ErrorCode::invalid_config, "stored projector does not match the configuration");
    } else {
      projector.emplace(cfg.strategy.projector_seed, cfg.strategy.latent_dim, vocab_size);
      projector->save(wpath);
    }
  }

  const std::string echo = dump(config_echo(cfg, baseline, vocab_size), 2) + "\n";
  const fs::path log_path = dir / "log.jsonl";
  const fs::path ckpt_path = dir / "checkpoint.json";

  optimizer::CmaState state;
  std::vector<GenerationLog> logs;
  if (options.resume && fs::exists(ckpt_path)) {
    if (read_file(dir / "config.json") != echo)
      throw Error(ErrorCode::invalid_config, "configuration differs from the checkpointed run");
    const json doc = json::parse(read_file(ckpt_path), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::parse_error, "checkpoint is not valid JSON");
    state = checkpoint_from(doc);
    logs = read_logs(dir);
    if (static_cast<int>(logs.size()) < state.generation)
      throw Error(ErrorCode::parse_error, "log holds fewer generations than the checkpoint");
    // A crash between appending the log and writing the checkpoint leaves extra lines.
    logs.resize(static_cast<std::size_t>(state.generation));
    std::string text;
    for (const auto& g : logs) text += to_json(g) + "\n";
    write_atomic(log_path, text);
  } else {
    write_file(dir / "config.json", echo);
    write_file(log_path, "");
    fs::remove(ckpt_path);
    state = optimizer::cma_init(cfg.optimizer);
  }

  const Pipeline pipeline{cfg, baseline, *generator, *scorer, evaluator, dir};
  std::string stop_reason;
  while (true) {
    const auto stop = optimizer::cma_should_stop(state, cfg.optimizer);
    if (stop.stop) {
      stop_reason = stop.reason;
      break;
    }
    if (options.stop_after && state.generation >= *options.stop_after) {
      stop_reason = "interrupted";
      break;
    }
    const int gen = state.generation;
    const auto genomes = optimizer::cma_ask(state, cfg.optimizer);
    std::vector<prompting::Prompt> prompts;
    prompts.reserve(genomes.size());
    for (const auto& x : genomes)
      prompts.push_back(bow ? bow->decode(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())))
                            : prompting::decode_tokens(
                                  std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), *projector,
                                  *vocab, cfg.strategy));

    if (cfg.write_artifacts) fs::create_directories(dir / ("gen_" + std::to_string(gen)));
    GenerationLog log;
    log.generation = gen;
    log.members = evaluate_population(pipeline, gen, genomes, prompts);
    fill_aggregates(log);

    {
      std::ofstream out(log_path, std::ios::binary | std::ios::app);
      out << to_json(log) << "\n";
      if (!out) throw Error(ErrorCode::missing_file, "cannot append to " + log_path.string());
    }
    logs.push_back(log);
    if (log.failed == static_cast<int>(log.members.size()))
      throw Error(ErrorCode::generation_aborted,
                  "every member of generation " + std::to_string(gen) + " failed: " + log.members.front().error);

    std::vector<double> fitness;
    fitness.reserve(log.members.size());
    for (const auto& m : log.members) fitness.push_back(m.score.f_hat);
    optimizer::cma_tell(state, cfg.optimizer, genomes, fitness);
    write_atomic(ckpt_path, dump(checkpoint_json(state)) + "\n");
  }

  RunReport rep;
  rep.generations = std::move(logs);
  rep.accuracy = accuracy_metrics(rep.generations);
  rep.token_usage = usage_of(rep.generations, vocab_size);
  rep.stop_reason = stop_reason;
  rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file(dir / "runtime.json", dump(json{{"wall_clock_seconds", rep.wall_clock_seconds},
                                             {"generations", rep.generations.size()},
                                             {"stop_reason", stop_reason}},
                                        2) +
                                       "\n");
  return rep;
}

ReportFiles report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw Error(ErrorCode::missing_run, run_dir.string() + " is not a directory");
  const auto logs = read_logs(run_dir);
  json echo = json::object();
  if (fs::exists(run_dir / "config.json")) {
    echo = json::parse(read_file(run_dir / "config.json"), nullptr, false);
    if (echo.is_discarded()) throw Error(ErrorCode::parse_error, "config.json is not valid JSON");
  }
  const std::size_t vocab_size = echo.contains("strategy") ? echo["strategy"].value("vocab_size", std::size_t{0}) : 0;

  ReportFiles files{run_dir / "generations.csv", run_dir / "logs.json", run_dir / "report.json",
                    run_dir / "token_usage.csv", run_dir / "gallery.json"};

  std::string csv = "generation,best_f_hat,mean_f_score,mean_s_penalty,accuracy,failed\n";
  for (const auto& g : logs)
    csv += std::to_string(g.generation) + "," + format_double(g.best_f_hat) + "," + format_double(g.mean_f_score) +
           "," + format_double(g.mean_s_penalty) + "," + format_double(generation_accuracy(g)) + "," +
           std::to_string(g.failed) + "\n";
  write_file(files.csv, csv);

  json all = json::array();
  for (const auto& g : logs) all.push_back(generation_json(g));
  write_file(files.logs, dump(json{{"config", echo}, {"generations", all}}, 2) + "\n");

  const auto usage = usage_of(logs, vocab_size);
  std::string usage_csv = "rank,count\n";
  for (const auto& [rank, count] : usage.counts) usage_csv += std::to_string(rank) + "," + std::to_string(count) + "\n";
  write_file(files.token_usage, usage_csv);

  const auto metrics = accuracy_metrics(logs);
  json best = nullptr;
  json gallery = json::array();
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& g : logs) {
    std::optional<std::size_t> lo, hi;
    json members = json::array();
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const auto& m = g.members[i];
      members.push_back({{"member", i},
                         {"prompt", m.prompt},
                         {"mesh", m.mesh_file},
                         {"render", m.render_file},
                         {"f_hat", m.score.f_hat},
                         {"failed", m.failed}});
      if (m.failed) continue;
      if (!lo || m.score.f_hat < g.members[*lo].score.f_hat) lo = i;
      if (!hi || m.score.f_hat > g.members[*hi].score.f_hat) hi = i;
      if (m.score.f_hat < best_f) {
        best_f = m.score.f_hat;
        best = {{"generation", g.generation}, {"member", i}, {"prompt", m.prompt}, {"f_hat", m.score.f_hat}};
      }
    }
    const auto pick = [&](const std::optional<std::size_t>& i) -> json {
      if (!i) return nullptr;
      const auto& m = g.members[*i];
      return {{"member", *i}, {"prompt", m.prompt}, {"mesh", m.mesh_file}, {"render", m.render_file},
              {"f_hat", m.score.f_hat}};
    };
    gallery.push_back({{"generation", g.generation}, {"best", pick(lo)}, {"worst", pick(hi)}, {"members", members}});
  }
  write_file(files.gallery, dump(json{{"generations", gallery}}, 2) + "\n");

  json summary{{"generations", logs.size()},
               {"final_accuracy", metrics.gen_final},
               {"overall_accuracy_mean", metrics.overall_mean},
               {"overall_accuracy_std", metrics.overall_std},
               {"best", best},
               {"token_usage", {{"distinct", usage.counts.size()}, {"coverage", usage.coverage}, {"vocab_size", vocab_size}}},
               {"config", echo}};
  write_file(files.summary, dump(summary, 2) + "\n");
  return files;
}

}  // namespace predo
