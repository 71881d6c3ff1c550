#include "predo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "predo/digest.hpp"
#include "predo/error.hpp"

namespace predo::optimizer {

void OptimizerConfig::validate() const {
  if (dimension < 1) throw Error(ErrorCode::invalid_config, "dimension must be >= 1");
  if (population_size < 1) throw Error(ErrorCode::invalid_config, "population size must be >= 1");
  if (parent_count < 1) throw Error(ErrorCode::invalid_config, "parent count must be >= 1");
  if (parent_count > population_size)
    throw Error(ErrorCode::invalid_config, "parent count exceeds population size");
  if (max_generations < 1) throw Error(ErrorCode::invalid_config, "max generations must be >= 1");
  if (!(initial_step > 0.0) || !std::isfinite(initial_step))
    throw Error(ErrorCode::invalid_config, "initial step must be positive");
  if (!(min_improvement >= 0.0)) throw Error(ErrorCode::invalid_config, "min improvement must be >= 0");
  if (initial_mean.size() != 0 && initial_mean.size() != dimension)
    throw Error(ErrorCode::invalid_config, "initial mean length differs from dimension");
}

StrategyParameters StrategyParameters::from(const OptimizerConfig& config) {
  const double n = config.dimension;
  const int mu = config.parent_count;
  StrategyParameters p;
  p.weights.resize(mu);
  for (int i = 0; i < mu; ++i) p.weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  p.weights /= p.weights.sum();
  p.mu_eff = 1.0 / p.weights.squaredNorm();
  p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
  p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
  p.c_mu = std::min(1.0 - p.c_1,
                    2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((n + 2.0) * (n + 2.0) + p.mu_eff));
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return p;
}

namespace {

struct Eigensystem {
  Eigen::MatrixXd basis;        // B
  Eigen::VectorXd scales;       // sqrt of floored eigenvalues (D)
};

Eigensystem decompose(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::numeric_degeneracy, "covariance eigendecomposition failed");
  Eigensystem sys{solver.eigenvectors(), solver.eigenvalues()};
  if (!sys.basis.allFinite() || !sys.scales.allFinite())
    throw Error(ErrorCode::numeric_degeneracy, "covariance has non-finite entries");
  sys.scales = sys.scales.cwiseMax(kEigenvalueFloor).cwiseSqrt();
  return sys;
}

void symmetrize(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyLower>() = m.transpose();
}

}  // namespace

CmaState cma_init(const OptimizerConfig& config) {
  config.validate();
  const int n = config.dimension;
  CmaState state;
  state.mean = config.initial_mean.size() == 0 ? Eigen::VectorXd::Zero(n) : config.initial_mean;
  state.step_size = config.initial_step;
  state.covariance = Eigen::MatrixXd::Identity(n, n);
  state.path_sigma = Eigen::VectorXd::Zero(n);
  state.path_c = Eigen::VectorXd::Zero(n);
  return state;
}

std::vector<Genome> cma_ask(const CmaState& state, const OptimizerConfig& config) {
  const int n = config.dimension;
  if (state.mean.size() != n) throw Error(ErrorCode::dimension_mismatch, "state/config dimension");
  const Eigensystem sys = decompose(state.covariance);
  const double sigma = std::max(state.step_size, kMinStep);

  std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(state.generation)));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Genome> population;
  population.reserve(static_cast<std::size_t>(config.population_size));
  Eigen::VectorXd z(n);
  for (int k = 0; k < config.population_size; ++k) {
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    population.emplace_back(state.mean + sigma * (sys.basis * sys.scales.cwiseProduct(z)));
  }
  return population;
}

std::vector<int> rank_ascending(std::span<const double> fitnesses) {
  std::vector<int> order(fitnesses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fitnesses[a] < fitnesses[b]; });
  return order;
}

void cma_tell(CmaState& state, const OptimizerConfig& config, std::span<const Genome> genomes,
              std::span<const double> fitnesses) {
  const auto lambda = static_cast<std::size_t>(config.population_size);
  if (genomes.size() != lambda || fitnesses.size() != lambda)
    throw Error(ErrorCode::length_mismatch, "expected exactly lambda genomes and fitnesses");
  for (double f : fitnesses)
    if (!std::isfinite(f)) throw Error(ErrorCode::non_finite_fitness, "fitness must be finite");
  const int n = config.dimension;
  for (const auto& g : genomes)
    if (g.size() != n) throw Error(ErrorCode::dimension_mismatch, "genome length");

  const StrategyParameters p = StrategyParameters::from(config);
  const int mu = config.parent_count;
  const std::vector<int> order = rank_ascending(fitnesses);
  const double sigma = std::max(state.step_size, kMinStep);

  const Eigensystem sys = decompose(state.covariance);
  const Eigen::MatrixXd inv_sqrt_c =
      sys.basis * sys.scales.cwiseInverse().asDiagonal() * sys.basis.transpose();

  Eigen::MatrixXd steps(n, mu);
  for (int i = 0; i < mu; ++i) steps.col(i) = (genomes[order[i]] - state.mean) / sigma;
  const Eigen::VectorXd weighted_step = steps * p.weights;

  state.mean += sigma * weighted_step;

  state.path_sigma = (1.0 - p.c_sigma) * state.path_sigma +
                     std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) * (inv_sqrt_c * weighted_step);
  const double ps_norm = state.path_sigma.norm();
  const double correction =
      std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * (state.generation + 1)));
  const bool h_sigma = ps_norm / correction / p.chi_n < 1.4 + 2.0 / (n + 1.0);

  state.path_c = (1.0 - p.c_c) * state.path_c;
  if (h_sigma) state.path_c += std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) * weighted_step;

  const double delta_h = h_sigma ? 0.0 : p.c_c * (2.0 - p.c_c);
  Eigen::MatrixXd rank_mu = steps * p.weights.asDiagonal() * steps.transpose();
  state.covariance = (1.0 - p.c_1 - p.c_mu) * state.covariance +
                     p.c_1 * (state.path_c * state.path_c.transpose() + delta_h * state.covariance) +
                     p.c_mu * rank_mu;
  symmetrize(state.covariance);

  // Re-impose the eigenvalue floor on the stored matrix.
  const Eigensystem updated = decompose(state.covariance);
  if (updated.scales.minCoeff() <= std::sqrt(kEigenvalueFloor)) {
    state.covariance =
        updated.basis * updated.scales.cwiseAbs2().asDiagonal() * updated.basis.transpose();
    symmetrize(state.covariance);
  }

  state.step_size = sigma * std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));
  state.step_size = std::clamp(state.step_size, kMinStep, 1e300);

  const int best = order.front();
  if (!state.best_so_far || fitnesses[best] < state.best_so_far->fitness)
    state.best_so_far = BestRecord{genomes[best], fitnesses[best]};
  state.best_history.push_back(state.best_so_far->fitness);
  ++state.generation;
}

StopDecision cma_should_stop(const CmaState& state, const OptimizerConfig& config) {
  if (state.generation >= config.max_generations) return {true, "max-generations"};
  if (config.min_improvement > 0.0 &&
      state.best_history.size() > static_cast<std::size_t>(kImprovementWindow)) {
    const std::size_t last = state.best_history.size() - 1;
    const double gained = state.best_history[last - kImprovementWindow] - state.best_history[last];
    if (gained < config.min_improvement) return {true, "min-improvement"};
  }
  return {};
}

}  // namespace predo::optimizer
