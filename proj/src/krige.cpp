#include "stgarch/krige.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stgarch/simulate.hpp"

namespace stgarch {

MACoefficients ma_coefficients(const ParameterPoint& point, int K) {
  MACoefficients ma;
  ma.point = point;
  ma.delta = point.delta();
  double lambda = 0.0;
  for (double d : ma.delta) lambda += d;
  if (lambda >= 1.0) throw std::domain_error("ma_coefficients: sum(delta) >= 1");
  ma.decay_lambda = lambda;

  if (K < 0) {
    if (lambda <= 0.0) {
      K = 0;
    } else {
      K = static_cast<int>(std::ceil(std::log(1e-12) / std::log(lambda)));
      K = std::min(K, 10000);
    }
  }
  ma.truncation = K;

  const int r = static_cast<int>(ma.delta.size());
  const int p = static_cast<int>(point.beta.size());
  ma.psi.assign(static_cast<std::size_t>(K + 1), 0.0);
  ma.psi[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    double v = 0.0;
    for (int i = 1; i <= std::min(k, r); ++i) {
      v += ma.delta[static_cast<std::size_t>(i - 1)] * ma.psi[static_cast<std::size_t>(k - i)];
    }
    if (k <= p) v -= point.beta[static_cast<std::size_t>(k - 1)];
    ma.psi[static_cast<std::size_t>(k)] = v;
  }

  double c = 1.0;
  if (lambda > 0.0) {
    for (int k = 1; k <= K; ++k) {
      c = std::max(c, std::abs(ma.psi[static_cast<std::size_t>(k)]) / std::pow(lambda, k));
    }
  }
  ma.decay_constant = c;
  return ma;
}

KrigingSystem kriging_weights(const std::vector<Location>& sites, const Location& target,
                              const CovarianceModel& model) {
  KrigingSystem system;
  system.target = target;
  system.sites = sites;
  system.R = build_covariance_matrix(sites, model);
  const auto m = static_cast<Eigen::Index>(sites.size());
  system.r.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = distance(target, sites[static_cast<std::size_t>(i)]);
    system.r[i] = model.sill * model.correlation(h) + (h == 0.0 ? model.nugget : 0.0);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(system.R);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system.R);
    std::ostringstream os;
    os << "kriging_weights: singular covariance matrix, condition number "
       << eig.eigenvalues().maxCoeff() / std::max(eig.eigenvalues().minCoeff(), 0.0);
    throw std::runtime_error(os.str());
  }
  system.gamma = ldlt.solve(system.r);
  const double residual = (system.R * system.gamma - system.r).norm();
  if (residual > 1e-8 * std::max(system.r.norm(), 1e-300)) {
    std::ostringstream os;
    os << "kriging_weights: ill-conditioned system, solve residual " << residual;
    throw std::runtime_error(os.str());
  }
  return system;
}

VolatilityPrediction predict_squared_process(const Location& target,
                                             const ParameterPoint& point_at_target,
                                             const ResidualPanel& zeta,
                                             const KrigingSystem& system) {
  const auto report = validate_parameters(point_at_target);
  if (!report.ok()) {
    throw std::invalid_argument("predict_squared_process: invalid target parameters: " +
                                report.violations.front());
  }
  if (zeta.m() != system.gamma.size()) {
    throw std::invalid_argument("predict_squared_process: zeta panel does not match system sites");
  }
  const Eigen::Index T = zeta.T();
  const auto delta = point_at_target.delta();
  const int r = static_cast<int>(delta.size());
  const int p = static_cast<int>(point_at_target.beta.size());

  VolatilityPrediction out;
  out.kriged_zeta.resize(static_cast<std::size_t>(T));
  const Eigen::VectorXd zbar = zeta.zeta * system.gamma;
  Eigen::VectorXd::Map(out.kriged_zeta.data(), T) = zbar;

  std::vector<double> raw(static_cast<std::size_t>(T), 0.0);
  out.z2.resize(static_cast<std::size_t>(T));
  out.sigma2.resize(static_cast<std::size_t>(T));
  out.vol.resize(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    double z2 = point_at_target.omega;
    for (int i = 1; i <= r; ++i) {
      if (t - i >= 0) z2 += delta[static_cast<std::size_t>(i - 1)] * raw[static_cast<std::size_t>(t - i)];
    }
    for (int j = 1; j <= p; ++j) {
      if (t - j >= 0) z2 -= point_at_target.beta[static_cast<std::size_t>(j - 1)] * zbar[t - j];
    }
    z2 += zbar[t];
    raw[static_cast<std::size_t>(t)] = z2;
    const double s2 = z2 - zbar[t];  // remove the contemporaneous innovation
    if (z2 < kVarianceFloor || s2 < kVarianceFloor) ++out.n_floored;
    out.z2[static_cast<std::size_t>(t)] = std::max(z2, kVarianceFloor);
    out.sigma2[static_cast<std::size_t>(t)] = std::max(s2, kVarianceFloor);
    out.vol[static_cast<std::size_t>(t)] = std::sqrt(out.sigma2[static_cast<std::size_t>(t)]);
  }
  return out;
}

double predictor_covariance(const MACoefficients& ma, const KrigingSystem& system, int t, int t2) {
  const int p = static_cast<int>(ma.point.beta.size());
  if (t < p + 1 || t2 < p + 1) {
    throw std::invalid_argument("predictor_covariance: time indices must be >= p+1");
  }
  const double quad = system.gamma.dot(system.R * system.gamma);
  // matched time indices: t - k = t2 - l  =>  l = k + (t2 - t)
  const int h = t2 - t;
  const int k_max = std::min({t - p - 1, t2 - p - 1 - h, ma.truncation});
  const int k_min = std::max(0, -h);
  double acc = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const int l = k + h;
    if (l > ma.truncation) break;
    acc += ma.psi[static_cast<std::size_t>(k)] * ma.psi[static_cast<std::size_t>(l)];
  }
  return acc * quad;
}

double predict_unconditional(const ParameterPoint& point_at_target) {
  return unconditional_variance(point_at_target);
}

}  // namespace stgarch
