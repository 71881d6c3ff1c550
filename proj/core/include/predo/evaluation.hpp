#pragma once

// Fitness normalization against a calibrated baseline, the vision-language
// penalty and the penalized objective that the optimizer minimizes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "predo/geometry.hpp"

namespace predo::services {
class Generator;
}

namespace predo::evaluation {

inline constexpr double kPenaltyEpsilon = 1e-6;
inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kCalibrationRetries = 3;

struct BaselineStats {
  std::vector<double> samples;
  double min = 0.0;
  double max = 0.0;
  double denominator = 0.0;
  std::string prompt = "A car";
  std::size_t n = 0;  // requested generations
  std::uint64_t seed = 0;
  std::size_t skipped = 0;

  static BaselineStats from_samples(std::vector<double> samples, std::string prompt, std::size_t n,
                                    std::uint64_t seed);
  std::uint64_t samples_digest() const;
};

struct ScoreRecord {
  double s_design = 0.0;
  double g = 0.0;
  double s_penalty = 0.0;
  double f_score = 0.0;
  double f_hat = 0.0;
  bool practical = false;
  double alpha = 1.0;
};

/// Maps a mesh to its design performance (smaller is better).
using DesignEvaluator = std::function<double(const geometry::TriMesh&)>;

/// Projected frontal area along +x of the normalized mesh.
double frontal_area_performance(const geometry::TriMesh& mesh, int resolution = 512,
                                geometry::Axis axis = geometry::Axis::x);

BaselineStats calibrate_baseline(services::Generator& generator, const DesignEvaluator& evaluator,
                                 std::size_t n = 300, const std::string& prompt = "A car",
                                 std::uint64_t seed = 0);

double normalize_fitness(double s_design, const BaselineStats& baseline);

/// -ln(clamp(g, eps, 1)).
double penalty(double g);

double penalized_score(double f_score, double s_penalty, double alpha);

bool practicality_label(double g, double threshold = kDefaultThreshold);

ScoreRecord score_design(double s_design, double g, const BaselineStats& baseline, double alpha,
                         double threshold = kDefaultThreshold);

/// Flat key-value calibration file ("key = value" lines, '#' comments).
void save_calibration(const BaselineStats& stats, const std::filesystem::path& path);
BaselineStats load_calibration(const std::filesystem::path& path);

}  // namespace predo::evaluation
