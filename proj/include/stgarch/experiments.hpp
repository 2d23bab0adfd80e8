#ifndef STGARCH_EXPERIMENTS_HPP
#define STGARCH_EXPERIMENTS_HPP

#include <cstdint>
#include <vector>

#include "stgarch/core.hpp"
#include "stgarch/covfit.hpp"
#include "stgarch/estimate.hpp"
#include "stgarch/simulate.hpp"

namespace stgarch {

struct MCConfig {
  int replications = 100;
  std::vector<int> n1 = {50, 100, 150};  // training-site counts
  int n2 = 50;                           // prediction sites per replication
  std::vector<int> T = {100, 200, 300};  // series lengths
  int grid = 10;                         // S0 evaluation grid per axis (0 = skip)
  std::uint64_t seed = 1;
  CovarianceModel model{CovarianceFamily::exponential, 1.0, 0.5, 0.0, 1.5};
  SurfaceConfig surface_config;
  GarchOrder order{1, 1};
  KernelFamily kernel = KernelFamily::uniform;
  double bandwidth = 0.0;  // 0 selects the n1^{-1/4} rule
  int burn_in = 500;
  bool fit_covariance = true;  // stage-two range estimation on eta residuals
  // looser gradient gate than the single-fit default: with thousands of short-T
  // local fits per run, a strict gate excludes enough targets to distort the
  // pooled bias/RMSE summaries
  OptimizerConfig opt{.gtol = 1e-4};
};

struct MCReplicationRecord {
  std::uint64_t seed = 0;
  double theta_hat = 0.0;  // fitted range, NaN when unavailable
  int n_targets_used = 0;
  int n_targets_excluded = 0;
  std::vector<double> omega_err, alpha_err, beta_err, vol_err;  // per kept target
  bool failed = false;
  std::string failure;
};

struct MCCell {
  int n1 = 0;
  int T = 0;
  double bias_omega = 0.0, rmse_omega = 0.0;
  double bias_alpha = 0.0, rmse_alpha = 0.0;
  double bias_beta = 0.0, rmse_beta = 0.0;
  double bias_vol = 0.0, rmse_vol = 0.0;
  double mean_theta_hat = 0.0;
  int n_replications = 0;
  int n_failed = 0;
  int n_targets_excluded = 0;
  double runtime_seconds = 0.0;
  std::vector<MCReplicationRecord> records;
};

struct MCReport {
  std::vector<MCCell> cells;
};

/// Pooled mean and root mean square over all replication-target errors.
double pooled_bias(const std::vector<double>& errors);
double pooled_rmse(const std::vector<double>& errors);

/// Simulation study: per replication draws training/prediction sites and a
/// random surface, simulates, fits locally at both site sets, extracts
/// residuals, fits the innovation covariance, and accumulates out-of-sample
/// bias/RMSE of the parameter surfaces and the predicted long-run variance.
/// Deterministic given config.seed; throws std::runtime_error when more than
/// 10% of replications fail in a cell.
MCReport run_monte_carlo(const MCConfig& config);

struct ApproxConfig {
  int replications = 50;
  int T = 500;
  int burn_in = 500;
  std::uint64_t seed = 7;
  CovarianceModel model{CovarianceFamily::exponential, 1.0, 0.5, 0.0, 1.5};
};

struct ApproxReport {
  std::vector<double> distances;
  std::vector<double> mean_deviation;  // averaged over replications and time
  double slope = 0.0;                  // through-origin fit of deviation vs distance
  double spearman = 0.0;               // rank correlation of distance vs deviation
};

/// Deviation between the true process and its stationary approximation frozen
/// at the anchor, driven by the same innovation path, per probe distance.
ApproxReport run_approximation_study(const ParameterSurface& surface, const Location& anchor,
                                     const std::vector<double>& distances,
                                     const ApproxConfig& config = {});

/// Spearman rank correlation of two equally sized samples.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace stgarch

#endif
