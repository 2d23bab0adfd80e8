#ifndef STGARCH_KRIGE_HPP
#define STGARCH_KRIGE_HPP

#include <vector>

#include <Eigen/Dense>

#include "stgarch/core.hpp"
#include "stgarch/covfit.hpp"

namespace stgarch {

/// MA weights of Z^2 on the zeta innovations: Z_t^2 = C + sum_k psi_k zeta_{t-k}.
/// Sign convention: the recursion is the one consistent with the identity
/// zeta_t = Z_t^2 - sigma_t^2, i.e. psi_k = sum_i delta_i psi_{k-i} - beta_k.
struct MACoefficients {
  ParameterPoint point;
  std::vector<double> psi;    // psi_0..psi_K, psi_0 = 1
  std::vector<double> delta;  // length r
  int truncation = 0;         // K
  double decay_lambda = 0.0;  // geometric decay rate (sum of delta)
  double decay_constant = 1.0;  // C with |psi_k| <= C * lambda^k
};

/// K < 0 selects the smallest K with lambda^K < 1e-12, capped at 1e4.
MACoefficients ma_coefficients(const ParameterPoint& point, int K = -1);

struct KrigingSystem {
  Location target;
  std::vector<Location> sites;
  Eigen::MatrixXd R;      // m x m covariance of zeta across sites
  Eigen::VectorXd r;      // cross-covariances to the target
  Eigen::VectorXd gamma;  // weights, R gamma = r
};

/// Builds and solves the kriging system. The nugget enters R's diagonal only;
/// it enters r only where the target coincides with a site. Throws
/// std::runtime_error with the condition number when R is singular.
KrigingSystem kriging_weights(const std::vector<Location>& sites, const Location& target,
                              const CovarianceModel& model);

struct VolatilityPrediction {
  std::vector<double> z2;       // predicted Z_t^2(target | m), floored
  std::vector<double> sigma2;   // predicted conditional variance, floored
  std::vector<double> vol;      // sqrt of sigma2
  std::vector<double> kriged_zeta;  // zeta_bar_t = sum_u gamma_u zeta_t(s_u)
  int n_floored = 0;            // raw predictions below the variance floor
};

constexpr double kVarianceFloor = 1e-10;

/// Recursive kriging predictor of the squared process at the target, driven by
/// the spatially interpolated innovations. Initial values are zero for t <= p.
VolatilityPrediction predict_squared_process(const Location& target,
                                             const ParameterPoint& point_at_target,
                                             const ResidualPanel& zeta,
                                             const KrigingSystem& system);

/// Closed-form covariance of the predictor at time indices t, t2 (both >= p+1,
/// 1-based); the double MA sum collapses onto matched time indices.
double predictor_covariance(const MACoefficients& ma, const KrigingSystem& system, int t, int t2);

/// Long-run variance level C(s0) at the target; the out-of-sample prediction
/// target of the simulation study.
double predict_unconditional(const ParameterPoint& point_at_target);

}  // namespace stgarch

#endif
