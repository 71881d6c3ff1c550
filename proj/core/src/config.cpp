#include "predo/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "predo/error.hpp"

namespace predo {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"strategy",
       {"kind", "reference_adjective", "reference_noun", "tokens", "latent_dim", "projector_seed", "wordnet",
        "vocab"}},
      {"optimizer",
       {"population", "parents", "max_generations", "initial_step", "initial_mean", "min_improvement"}},
      {"objective",
       {"kind", "alpha", "target_prompt", "baseline", "baseline_min", "baseline_max", "worst_fitness", "practical_threshold", "axis",
        "area_resolution"}},
      {"endpoints", {"generator", "scorer", "evaluator", "timeout", "retries", "auth_token", "parallelism"}},
      {"mock", {"hallucination_rate_base", "rare_token_boost", "seed"}},
      {"render", {"azimuth", "elevation", "resolution"}},
      {"calibration", {"n", "prompt", "seed"}},
      {"run", {"seed", "output_dir", "write_artifacts"}},
  };
  return s;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void bad(const std::string& section, const std::string& key, const std::string& why) {
  throw Error(ErrorCode::invalid_config, "[" + section + "] " + key + ": " + why);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void text(const std::string& section, const std::string& key, std::string& out) const {
    if (auto v = raw(section, key)) out = *v;
  }

  void path(const std::string& section, const std::string& key, std::filesystem::path& out) const {
    if (auto v = raw(section, key)) {
      std::filesystem::path p(*v);
      out = (p.is_relative() && !base_.empty() && !v->empty()) ? base_ / p : p;
    }
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, T& out) const {
    const auto v = raw(section, key);
    if (!v) return;
    T parsed{};
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
    if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty()) bad(section, key, "not a number: " + *v);
    out = parsed;
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    const auto v = raw(section, key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") out = true;
    else if (*v == "false" || *v == "0" || *v == "no") out = false;
    else bad(section, key, "expected true/false");
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;
};

Eigen::VectorXd parse_mean(const std::string& text, int dimension) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) bad("optimizer", "initial_mean", "empty entry");
    item = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size()) bad("optimizer", "initial_mean", "not a number");
    values.push_back(v);
  }
  if (values.size() == 1) return Eigen::VectorXd::Constant(dimension, values[0]);
  if (static_cast<int>(values.size()) != dimension)
    bad("optimizer", "initial_mean",
        "expected 1 or " + std::to_string(dimension) + " values, got " + std::to_string(values.size()));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), dimension);
}

}  // namespace

services::EndpointConfig EndpointsConfig::endpoint(const std::string& url) const {
  services::EndpointConfig e;
  e.base_url = url;
  e.timeout_seconds = timeout_seconds;
  e.retries = retries;
  e.auth_token = auth_token;
  return e;
}

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::frontal_area ? "frontal_area" : "external";
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void RunConfig::validate() const {
  optimizer.validate();
  mock.validate();
  const int dim = prompting::genome_dimension(strategy);
  if (optimizer.dimension != dim)
    throw Error(ErrorCode::invalid_config, "optimizer dimension " + std::to_string(optimizer.dimension) +
                                               " does not match genome dimension " + std::to_string(dim));
  if (strategy.kind == prompting::StrategyKind::tokenization && (strategy.token_count < 1 || strategy.latent_dim < 1))
    throw Error(ErrorCode::invalid_config, "tokens and latent_dim must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::invalid_config, "alpha must be >= 0");
  if (!(practical_threshold >= 0.0 && practical_threshold <= 1.0))
    throw Error(ErrorCode::invalid_config, "practical_threshold must lie in [0, 1]");
  if (!std::isfinite(worst_fitness)) throw Error(ErrorCode::invalid_config, "worst_fitness must be finite");
  if (area_resolution < 16) throw Error(ErrorCode::invalid_config, "area_resolution must be >= 16");
  if (view.resolution < 8) throw Error(ErrorCode::invalid_config, "render resolution must be >= 8");
  if (endpoints.parallelism < 1) throw Error(ErrorCode::invalid_config, "parallelism must be >= 1");
  if (endpoints.retries < 0) throw Error(ErrorCode::invalid_config, "retries must be >= 0");
  if (!(endpoints.timeout_seconds > 0.0)) throw Error(ErrorCode::invalid_config, "timeout must be positive");
  if (objective == ObjectiveKind::external && endpoints.evaluator.empty())
    throw Error(ErrorCode::invalid_config, "objective 'external' needs [endpoints] evaluator");
  if (calibration.n < 2) throw Error(ErrorCode::invalid_config, "calibration n must be >= 2");
  if (output_dir.empty()) throw Error(ErrorCode::invalid_config, "output_dir must not be empty");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir, const EnvLookup& env) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::invalid_config, "config line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw Error(ErrorCode::invalid_config, "unknown section [" + section + "]");
    if (!body.data().empty()) throw Error(ErrorCode::invalid_config, "key outside a section: " + section);
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) bad(section, key, "unknown key");
  }
  if (env) {
    for (const auto& [section, keys] : schema())
      for (const auto& key : keys)
        if (auto v = env("PREDO_" + upper(section) + "_" + upper(key))) tree.put(pt::ptree::path_type(section + "/" + key, '/'), *v);
  }

  const Reader r(tree, base_dir);
  RunConfig cfg;

  if (auto v = r.raw("strategy", "kind")) {
    try {
      cfg.strategy.kind = prompting::strategy_from_string(*v);
    } catch (const Error&) {
      bad("strategy", "kind", "unknown strategy '" + *v + "'");
    }
  }
  r.text("strategy", "reference_adjective", cfg.strategy.reference_adjective);
  r.text("strategy", "reference_noun", cfg.strategy.reference_noun);
  r.number("strategy", "tokens", cfg.strategy.token_count);
  r.number("strategy", "latent_dim", cfg.strategy.latent_dim);
  r.path("strategy", "wordnet", cfg.wordnet_dir);
  r.path("strategy", "vocab", cfg.vocab_path);

  r.number("run", "seed", cfg.seed);
  r.path("run", "output_dir", cfg.output_dir);
  r.flag("run", "write_artifacts", cfg.write_artifacts);
  cfg.strategy.projector_seed = cfg.seed;
  r.number("strategy", "projector_seed", cfg.strategy.projector_seed);

  auto& opt = cfg.optimizer;
  opt.dimension = prompting::genome_dimension(cfg.strategy);
  opt.seed = cfg.seed;
  r.number("optimizer", "population", opt.population_size);
  r.number("optimizer", "parents", opt.parent_count);
  r.number("optimizer", "max_generations", opt.max_generations);
  r.number("optimizer", "initial_step", opt.initial_step);
  r.number("optimizer", "min_improvement", opt.min_improvement);
  // Bag-of-words targets live in [0, 1]; start from its centre.
  const double default_mean = cfg.strategy.kind == prompting::StrategyKind::bag_of_words ? 0.5 : 0.0;
  opt.initial_mean = Eigen::VectorXd::Constant(opt.dimension, default_mean);
  if (auto v = r.raw("optimizer", "initial_mean")) opt.initial_mean = parse_mean(*v, opt.dimension);

  if (auto v = r.raw("objective", "kind")) {
    if (*v == "frontal_area") cfg.objective = ObjectiveKind::frontal_area;
    else if (*v == "external") cfg.objective = ObjectiveKind::external;
    else bad("objective", "kind", "expected frontal_area or external");
  }
  r.number("objective", "alpha", cfg.alpha);
  r.text("objective", "target_prompt", cfg.target_prompt);
  r.path("objective", "baseline", cfg.baseline_path);
  r.number("objective", "worst_fitness", cfg.worst_fitness);
  r.number("objective", "practical_threshold", cfg.practical_threshold);
  r.number("objective", "area_resolution", cfg.area_resolution);
  if (auto v = r.raw("objective", "axis")) {
    try {
      cfg.axis = geometry::axis_from_string(*v);
    } catch (const Error&) {
      bad("objective", "axis", "expected x, y or z");
    }
  }

  r.text("endpoints", "generator", cfg.endpoints.generator);
  r.text("endpoints", "scorer", cfg.endpoints.scorer);
  r.text("endpoints", "evaluator", cfg.endpoints.evaluator);
  r.number("endpoints", "timeout", cfg.endpoints.timeout_seconds);
  r.number("endpoints", "retries", cfg.endpoints.retries);
  r.number("endpoints", "parallelism", cfg.endpoints.parallelism);
  if (auto v = r.raw("endpoints", "auth_token"); v && !v->empty()) cfg.endpoints.auth_token = *v;

  cfg.mock.seed = cfg.seed;
  r.number("mock", "hallucination_rate_base", cfg.mock.hallucination_rate_base);
  r.number("mock", "rare_token_boost", cfg.mock.rare_token_boost);
  r.number("mock", "seed", cfg.mock.seed);

  r.number("render", "azimuth", cfg.view.azimuth_deg);
  r.number("render", "elevation", cfg.view.elevation_deg);
  r.number("render", "resolution", cfg.view.resolution);

  cfg.calibration.seed = cfg.seed;
  r.number("calibration", "n", cfg.calibration.n);
  r.text("calibration", "prompt", cfg.calibration.prompt);
  r.number("calibration", "seed", cfg.calibration.seed);

  const bool has_min = r.raw("objective", "baseline_min").has_value();
  if (has_min != r.raw("objective", "baseline_max").has_value())
    bad("objective", "baseline_min", "baseline_min and baseline_max go together");
  if (has_min) {
    double lo = 0.0, hi = 0.0;
    r.number("objective", "baseline_min", lo);
    r.number("objective", "baseline_max", hi);
    try {
      cfg.baseline = evaluation::BaselineStats::from_samples({lo, hi}, "inline", 2, 0);
    } catch (const Error& e) {
      bad("objective", "baseline_max", e.what());
    }
  }
  if (cfg.baseline_path.empty()) cfg.baseline_path = cfg.output_dir / "baseline.txt";

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_config, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path(), env);
}

}  // namespace predo
