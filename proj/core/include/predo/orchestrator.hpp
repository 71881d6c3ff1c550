#pragma once

// The optimization loop: ask, decode, generate, evaluate, penalize, tell.
//
// Run directory layout:
//   config.json          effective configuration (deterministic echo)
//   projector.bin        token projection weights (tokenization only)
//   log.jsonl            one GenerationLog per line, appended by the control loop
//   checkpoint.json      optimizer state after the last logged generation
//   runtime.json         wall-clock timings (the only non-deterministic file)
//   gen_<k>/member_<i>.obj|.png
// report() adds generations.csv, logs.json, report.json, token_usage.csv and
// gallery.json, all derived from the files above.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "predo/config.hpp"
#include "predo/evaluation.hpp"
#include "predo/prompting.hpp"
#include "predo/services.hpp"

namespace predo {

struct MemberRecord {
  std::vector<double> genome;
  std::string genome_digest;
  std::string prompt;
  std::vector<std::size_t> token_ranks;
  bool failed = false;
  std::string error;
  evaluation::ScoreRecord score;
  std::optional<bool> ground_truth;
  std::string mesh_file;    // relative to the run directory, empty if not written
  std::string render_file;
};

struct GenerationLog {
  int generation = 0;
  std::vector<MemberRecord> members;
  double best_f_hat = 0.0;
  double mean_f_score = 0.0;
  double mean_s_penalty = 0.0;
  double accuracy = 0.0;
  int failed = 0;
};

struct AccuracyMetrics {
  double gen_final = 0.0;
  double overall_mean = 0.0;
  double overall_std = 0.0;  // population standard deviation
};

struct RunReport {
  std::vector<GenerationLog> generations;
  AccuracyMetrics accuracy;
  prompting::TokenUsage token_usage;
  double wall_clock_seconds = 0.0;
  std::string stop_reason;
};

/// Practical count / members: ground truth when every member carries one,
/// otherwise the thresholded practicality label. Failed members count as impractical.
double generation_accuracy(const GenerationLog& log);

/// Recomputes best/mean/accuracy aggregates from the member records.
void fill_aggregates(GenerationLog& log);

AccuracyMetrics accuracy_metrics(std::span<const GenerationLog> logs);

struct RunOptions {
  bool resume = false;
  /// Stop after this many generations in total (simulates an interruption).
  std::optional<int> stop_after;
  /// Injected endpoints; built from the config when null.
  std::shared_ptr<services::Generator> generator;
  std::shared_ptr<services::Scorer> scorer;
};

/// Endpoints named by the config ("mock" or an HTTP base URL).
std::shared_ptr<services::Generator> make_generator(const RunConfig& cfg);
std::shared_ptr<services::Scorer> make_scorer(const RunConfig& cfg);
evaluation::DesignEvaluator make_evaluator(const RunConfig& cfg);

RunReport run(const RunConfig& cfg, const RunOptions& options = {});

std::string to_json(const GenerationLog& log);
GenerationLog generation_from_json(const std::string& line);

/// Reads log.jsonl; throws Error(missing_run) when there is nothing to read.
std::vector<GenerationLog> read_logs(const std::filesystem::path& run_dir);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path logs;
  std::filesystem::path summary;
  std::filesystem::path token_usage;
  std::filesystem::path gallery;
};

ReportFiles report(const std::filesystem::path& run_dir);

}  // namespace predo
