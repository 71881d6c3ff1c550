#pragma once

// Derandomized evolution strategy with covariance matrix adaptation (CMA-ES).
//
// The optimizer is split into ask/tell so a caller can evaluate the population
// however it likes (concurrently, remotely) between the two calls. Sampling for
// generation g draws from a substream derived from (seed, g), so evaluation order
// never perturbs the sampled populations.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace predo::optimizer {

using Genome = Eigen::VectorXd;

struct OptimizerConfig {
  int dimension = 1;
  int population_size = 10;
  int parent_count = 3;
  int max_generations = 100;
  Eigen::VectorXd initial_mean;  // empty means zeros(dimension)
  double initial_step = 0.2;
  double min_improvement = 0.0;  // 0 disables the stagnation criterion
  std::uint64_t seed = 0;

  void validate() const;  // throws Error(invalid_config)
};

struct BestRecord {
  Genome genome;
  double fitness = 0.0;
};

inline constexpr double kEigenvalueFloor = 1e-12;
inline constexpr double kMinStep = 1e-300;
inline constexpr int kImprovementWindow = 10;

struct CmaState {
  Eigen::VectorXd mean;
  double step_size = 0.0;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  int generation = 0;
  std::optional<BestRecord> best_so_far;
  /// best_so_far fitness after each completed generation.
  std::vector<double> best_history;
};

/// Strategy constants derived from (dimension, lambda, mu).
struct StrategyParameters {
  Eigen::VectorXd weights;  // length mu, sums to 1
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  static StrategyParameters from(const OptimizerConfig& config);
};

CmaState cma_init(const OptimizerConfig& config);

/// Returns exactly lambda genomes drawn from N(mean, sigma^2 C).
std::vector<Genome> cma_ask(const CmaState& state, const OptimizerConfig& config);

/// Updates the distribution from the mu lowest fitnesses (ties: lower index first).
void cma_tell(CmaState& state, const OptimizerConfig& config, std::span<const Genome> genomes,
              std::span<const double> fitnesses);

struct StopDecision {
  bool stop = false;
  std::string reason;  // "max-generations", "min-improvement" or empty
};

StopDecision cma_should_stop(const CmaState& state, const OptimizerConfig& config);

/// Stable ranking of fitnesses, ascending, ties by index.
std::vector<int> rank_ascending(std::span<const double> fitnesses);

}  // namespace predo::optimizer
