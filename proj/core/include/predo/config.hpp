#pragma once

// Run configuration: an INI-style file whose sections mirror RunConfig, with
// PREDO_<SECTION>_<FIELD> environment overrides.
//
//   [strategy]   kind, reference_adjective, reference_noun, tokens, latent_dim,
//                projector_seed, wordnet, vocab
//   [optimizer]  population, parents, max_generations, initial_step,
//                initial_mean, min_improvement
//   [objective]  kind, alpha, target_prompt, baseline, baseline_min,
//                baseline_max, worst_fitness, practical_threshold, axis,
//                area_resolution
//   [endpoints]  generator, scorer, evaluator, timeout, retries, auth_token,
//                parallelism
//   [mock]       hallucination_rate_base, rare_token_boost, seed
//   [render]     azimuth, elevation, resolution
//   [calibration] n, prompt, seed
//   [run]        seed, output_dir, write_artifacts

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "predo/evaluation.hpp"
#include "predo/geometry.hpp"
#include "predo/optimizer.hpp"
#include "predo/prompting.hpp"
#include "predo/services.hpp"

namespace predo {

enum class ObjectiveKind { frontal_area, external };

struct EndpointsConfig {
  std::string generator = "mock";  // "mock" or a base URL
  std::string scorer = "mock";
  std::string evaluator;  // base URL, objective = external only
  double timeout_seconds = 120.0;
  int retries = 2;
  std::optional<std::string> auth_token;
  int parallelism = 4;

  services::EndpointConfig endpoint(const std::string& url) const;
};

struct CalibrationConfig {
  std::size_t n = 300;
  std::string prompt = "A car";
  std::uint64_t seed = 0;
};

struct RunConfig {
  prompting::StrategyConfig strategy;
  std::filesystem::path wordnet_dir;
  std::filesystem::path vocab_path;
  optimizer::OptimizerConfig optimizer;

  ObjectiveKind objective = ObjectiveKind::frontal_area;
  double alpha = 1.0;
  std::string target_prompt = "a car";
  std::filesystem::path baseline_path;
  /// Inline baseline; takes precedence over baseline_path.
  std::optional<evaluation::BaselineStats> baseline;
  double worst_fitness = 1e6;
  double practical_threshold = 0.5;
  geometry::Axis axis = geometry::Axis::x;
  int area_resolution = 512;

  EndpointsConfig endpoints;
  services::MockConfig mock;
  geometry::ViewParams view;
  CalibrationConfig calibration;

  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "predo-run";
  bool write_artifacts = true;

  /// Cross-field invariants (optimizer dimension = genome dimension, ...).
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Parses config text; relative paths resolve against `base_dir`.
/// Throws Error(invalid_config) on unknown keys or bad values.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {},
                           const EnvLookup& env = process_env);
RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

std::string to_string(ObjectiveKind kind);

}  // namespace predo
