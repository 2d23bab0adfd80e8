#ifndef STGARCH_SIMULATE_HPP
#define STGARCH_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stgarch/bspline.hpp"
#include "stgarch/core.hpp"

namespace stgarch {

/// Dense covariance matrix: (i,j) = sill * rho(|si-sj|/range) + nugget * 1{i=j}.
/// Throws std::invalid_argument for duplicate locations with zero nugget.
Eigen::MatrixXd build_covariance_matrix(const std::vector<Location>& locations,
                                        const CovarianceModel& model);

/// Serial reference for build_covariance_matrix (kept for testing and benchmarks).
Eigen::MatrixXd build_covariance_matrix_ref(const std::vector<Location>& locations,
                                            const CovarianceModel& model);

/// Samples iid-over-time rows of a zero-mean Gaussian field with unit marginal
/// variance; sill and nugget of the model are read as a decomposition of that
/// unit variance (they are normalised by sill + nugget).
class FieldSampler {
 public:
  FieldSampler(std::vector<Location> locations, CovarianceModel model, std::uint64_t seed);

  /// T x m matrix of eta_t(s_u); deterministic given the constructor seed.
  Eigen::MatrixXd sample(Eigen::Index T) const;

  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  const std::vector<Location>& locations() const { return locations_; }

 private:
  std::vector<Location> locations_;
  CovarianceModel model_;
  Eigen::MatrixXd correlation_;  // unit-marginal covariance
  Eigen::MatrixXd factor_;       // lower Cholesky factor
  std::uint64_t seed_;
};

/// Runs the volatility recursion at every location, driven by the given
/// innovations; starts at the unconditional variance and drops burn_in rows.
Panel simulate_stgarch(const ParameterSurface& surface, const Eigen::MatrixXd& innovations,
                       const std::vector<Location>& locations, int burn_in);

/// Coefficient ranges for randomised parameter surfaces. Each spline
/// coefficient is drawn uniformly in its range, so by the convex-hull property
/// every surface value stays inside the range as well.
struct SurfaceConfig {
  int grid = 4;    // spline coefficients per axis
  int degree = 3;  // cubic by default, twice continuously differentiable
  double omega_min = 0.02, omega_max = 0.30;
  double alpha_min = 0.05, alpha_max = 0.30;  // per ARCH lag
  double beta_min = 0.05, beta_max = 0.65;    // per GARCH lag
  ConstraintConfig bounds;
};

/// Randomised tensor-spline surface; throws std::invalid_argument when the
/// worst-case coefficient sums cannot satisfy the stationarity margin.
ParameterSurface random_bspline_surface(const GarchOrder& order, std::uint64_t seed,
                                        const SurfaceConfig& config = {});

/// Counter-based seed split: child stream k of a master seed.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t k);

}  // namespace stgarch

#endif
