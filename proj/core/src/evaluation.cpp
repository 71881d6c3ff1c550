#include "predo/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "predo/digest.hpp"
#include "predo/error.hpp"
#include "predo/services.hpp"

namespace predo::evaluation {

BaselineStats BaselineStats::from_samples(std::vector<double> samples, std::string prompt, std::size_t n,
                                          std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::insufficient_samples, "no baseline samples");
  BaselineStats stats;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  stats.min = *lo;
  stats.max = *hi;
  stats.denominator = stats.max - stats.min;
  if (!(stats.denominator > 0.0))
    throw Error(ErrorCode::degenerate_baseline, "baseline max equals min");
  stats.samples = std::move(samples);
  stats.prompt = std::move(prompt);
  stats.n = n;
  stats.seed = seed;
  return stats;
}

std::uint64_t BaselineStats::samples_digest() const { return digest_doubles(samples); }

double frontal_area_performance(const geometry::TriMesh& mesh, int resolution, geometry::Axis axis) {
  return geometry::frontal_area(geometry::silhouette(geometry::normalize(mesh), axis, resolution));
}

BaselineStats calibrate_baseline(services::Generator& generator, const DesignEvaluator& evaluator,
                                 std::size_t n, const std::string& prompt, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::invalid_config, "calibration needs n >= 2");
  std::vector<double> samples;
  samples.reserve(n);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool done = false;
    for (int attempt = 0; attempt <= kCalibrationRetries && !done; ++attempt) {
      const std::uint64_t sample_seed = mix_seed(mix_seed(seed, i), static_cast<std::uint64_t>(attempt));
      try {
        const auto result = generator.generate(prompt, sample_seed);
        const double s = evaluator(geometry::load_obj(result.mesh_obj).mesh);
        if (!std::isfinite(s)) continue;
        samples.push_back(s);
        done = true;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_config) throw;
      }
    }
    if (!done) ++skipped;
  }
  if (2 * samples.size() < n)
    throw Error(ErrorCode::insufficient_samples,
                std::to_string(samples.size()) + " of " + std::to_string(n) + " generations succeeded");
  auto stats = BaselineStats::from_samples(std::move(samples), prompt, n, seed);
  stats.skipped = skipped;
  return stats;
}

double normalize_fitness(double s_design, const BaselineStats& baseline) {
  if (!(baseline.denominator > 0.0))
    throw Error(ErrorCode::degenerate_baseline, "baseline denominator must be positive");
  return s_design / baseline.denominator;
}

double penalty(double g) {
  if (std::isnan(g)) g = 0.0;
  return 0.0 - std::log(std::clamp(g, kPenaltyEpsilon, 1.0));
}

double penalized_score(double f_score, double s_penalty, double alpha) {
  return f_score + alpha * s_penalty;
}

bool practicality_label(double g, double threshold) { return g >= threshold; }

ScoreRecord score_design(double s_design, double g, const BaselineStats& baseline, double alpha,
                         double threshold) {
  ScoreRecord r;
  r.s_design = s_design;
  r.g = std::isnan(g) ? 0.0 : std::clamp(g, 0.0, 1.0);
  r.s_penalty = penalty(r.g);
  r.f_score = normalize_fitness(s_design, baseline);
  r.alpha = alpha;
  r.f_hat = penalized_score(r.f_score, r.s_penalty, alpha);
  r.practical = practicality_label(r.g, threshold);
  return r;
}

namespace {

constexpr int kCalibrationVersion = 1;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::parse_error, "calibration: bad number for '" + key + "'");
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void save_calibration(const BaselineStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::missing_file, path.string());
  out << "# predo baseline calibration\n";
  out << "version = " << kCalibrationVersion << "\n";
  out << "prompt = " << stats.prompt << "\n";
  out << "n = " << stats.n << "\n";
  out << "seed = " << stats.seed << "\n";
  out << "successes = " << stats.samples.size() << "\n";
  out << "skipped = " << stats.skipped << "\n";
  out << "samples_digest = " << to_hex(stats.samples_digest()) << "\n";
  out << "min = " << format_double(stats.min) << "\n";
  out << "max = " << format_double(stats.max) << "\n";
  out << "denominator = " << format_double(stats.denominator) << "\n";
  out << "samples = ";
  for (std::size_t i = 0; i < stats.samples.size(); ++i)
    out << (i ? "," : "") << format_double(stats.samples[i]);
  out << "\n";
}

BaselineStats load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::calibration_missing, path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::parse_error, "calibration: expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::parse_error, "calibration: missing '" + key + "'");
    return it->second;
  };
  if (get("version") != std::to_string(kCalibrationVersion))
    throw Error(ErrorCode::parse_error, "calibration: unsupported version " + get("version"));
  std::vector<double> samples;
  std::stringstream ss(get("samples"));
  std::string item;
  while (std::getline(ss, item, ',')) samples.push_back(parse_double(trim(item), "samples"));
  auto stats = BaselineStats::from_samples(std::move(samples), get("prompt"),
                                           static_cast<std::size_t>(std::stoull(get("n"))),
                                           std::stoull(get("seed")));
  stats.skipped = static_cast<std::size_t>(std::stoull(get("skipped")));
  if (to_hex(stats.samples_digest()) != get("samples_digest"))
    throw Error(ErrorCode::parse_error, "calibration: samples digest mismatch");
  if (parse_double(get("min"), "min") != stats.min || parse_double(get("max"), "max") != stats.max)
    throw Error(ErrorCode::parse_error, "calibration: min/max disagree with samples");
  return stats;
}

}  // namespace predo::evaluation
