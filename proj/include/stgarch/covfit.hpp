#ifndef STGARCH_COVFIT_HPP
#define STGARCH_COVFIT_HPP

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgarch/core.hpp"
#include "stgarch/estimate.hpp"

namespace stgarch {

/// Standardised residuals eta_t = Z_t / sigma_t and the centred chi-square
/// field zeta_t = sigma_t^2 (eta_t^2 - 1), aligned on a common time index set.
struct ResidualPanel {
  Eigen::MatrixXd eta;   // T' x m
  Eigen::MatrixXd zeta;  // T' x m
  std::vector<Location> locations;
  std::vector<std::string> diagnostics;  // per-site variance-band warnings

  Eigen::Index T() const { return eta.rows(); }
  Eigen::Index m() const { return eta.cols(); }
};

enum class ResidualField { eta, zeta };

/// Filters every series with its fitted parameters; the first p entries per
/// site are dropped as filter warm-up. Throws when a fit is missing or did not
/// converge.
ResidualPanel extract_residuals(const Panel& panel, const std::vector<LocalFit>& fits);

struct VariogramBin {
  double distance = 0.0;     // bin midpoint
  double semivariance = 0.0;
  std::size_t pairs = 0;     // site pairs in the bin
};

/// Classical Matheron semivariogram, averaged over time; empty bins omitted.
std::vector<VariogramBin> empirical_variogram(const ResidualPanel& res, ResidualField field,
                                              const std::vector<double>& bin_edges);

/// Evenly spaced bin edges up to the maximum inter-site distance.
std::vector<double> default_bin_edges(const std::vector<Location>& locations, int n_bins = 15);

struct CovarianceFitResult {
  CovarianceModel model;
  std::array<double, 3> std_errors{};  // sill, range, nugget
  std::array<double, 3> z_scores{};
  double neg_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Gaussian maximum likelihood over time replicates of the chosen residual
/// field; optimised in log parameters. `init` with sill <= 0 requests the
/// variogram-based auto-initialisation.
CovarianceFitResult fit_covariance_mle(const ResidualPanel& res, ResidualField field,
                                       CovarianceFamily family,
                                       const CovarianceModel& init = {CovarianceFamily::exponential,
                                                                      0.0, 0.0, 0.0, 1.5});

/// Covariance model of the zeta field implied by an eta-field fit via the
/// squared-Gaussian identity cov(eta^2, eta'^2) = 2 c(h)^2, scaled by the mean
/// fourth power of the fitted volatility. Exact for the exponential family
/// (squaring halves the range); for Matern the range-halving approximation is
/// used.
CovarianceModel zeta_model_from_eta(const CovarianceModel& eta_model, double mean_sigma4);

}  // namespace stgarch

#endif
