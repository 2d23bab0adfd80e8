#include "stgarch/covfit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "stgarch/neldermead.hpp"
#include "stgarch/simulate.hpp"

namespace stgarch {

ResidualPanel extract_residuals(const Panel& panel, const std::vector<LocalFit>& fits) {
  panel.check();
  const auto m = static_cast<std::size_t>(panel.m());
  if (fits.size() != m) {
    throw std::invalid_argument("extract_residuals: one fit per panel location required");
  }
  int p = 0;
  for (std::size_t u = 0; u < m; ++u) {
    if (!fits[u].converged) {
      throw std::invalid_argument("extract_residuals: non-converged fit at site " +
                                  std::to_string(u));
    }
    p = std::max(p, static_cast<int>(fits[u].estimate.beta.size()));
  }
  const Eigen::Index T = panel.T();
  if (T <= p) throw std::invalid_argument("extract_residuals: series shorter than warm-up");

  ResidualPanel res;
  res.locations = panel.locations;
  res.eta.resize(T - p, panel.m());
  res.zeta.resize(T - p, panel.m());
  for (std::size_t u = 0; u < m; ++u) {
    std::vector<double> series(static_cast<std::size_t>(T));
    Eigen::VectorXd::Map(series.data(), T) = panel.values.col(static_cast<Eigen::Index>(u));
    const auto sigma2 = volatility_filter(fits[u].estimate, series);
    for (Eigen::Index t = p; t < T; ++t) {
      const double s2 = sigma2[static_cast<std::size_t>(t)];
      const double eta = series[static_cast<std::size_t>(t)] / std::sqrt(s2);
      res.eta(t - p, static_cast<Eigen::Index>(u)) = eta;
      res.zeta(t - p, static_cast<Eigen::Index>(u)) = s2 * (eta * eta - 1.0);
    }
    const Eigen::VectorXd col = res.eta.col(static_cast<Eigen::Index>(u));
    const double var = (col.array() - col.mean()).square().sum() / (col.size() - 1);
    if (var < 0.5 || var > 2.0) {
      std::ostringstream os;
      os << "site " << u << ": standardised residual variance " << var
         << " outside [0.5, 2.0]";
      res.diagnostics.push_back(os.str());
    }
  }
  return res;
}

std::vector<double> default_bin_edges(const std::vector<Location>& locations, int n_bins) {
  double max_dist = 0.0;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      max_dist = std::max(max_dist, distance(locations[i], locations[j]));
    }
  }
  if (max_dist <= 0.0) max_dist = 1.0;
  std::vector<double> edges(static_cast<std::size_t>(n_bins + 1));
  for (int k = 0; k <= n_bins; ++k) {
    edges[static_cast<std::size_t>(k)] = max_dist * static_cast<double>(k) / n_bins;
  }
  edges.back() *= 1.0 + 1e-12;  // include the extreme pair
  return edges;
}

std::vector<VariogramBin> empirical_variogram(const ResidualPanel& res, ResidualField field,
                                              const std::vector<double>& bin_edges) {
  if (res.m() < 2) throw std::invalid_argument("empirical_variogram: need at least 2 locations");
  if (bin_edges.size() < 2) throw std::invalid_argument("empirical_variogram: need bin edges");
  const Eigen::MatrixXd& X = field == ResidualField::eta ? res.eta : res.zeta;
  const std::size_t n_bins = bin_edges.size() - 1;
  std::vector<double> acc(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  const double Tn = static_cast<double>(X.rows());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < X.cols(); ++j) {
      const double h = distance(res.locations[static_cast<std::size_t>(i)],
                                res.locations[static_cast<std::size_t>(j)]);
      auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), h);
      if (it == bin_edges.begin() || it == bin_edges.end()) {
        if (!(h == bin_edges.front())) continue;
        it = bin_edges.begin() + 1;
      }
      const auto bin = static_cast<std::size_t>(it - bin_edges.begin() - 1);
      const double mean_sq_diff = (X.col(i) - X.col(j)).squaredNorm() / Tn;
      acc[bin] += 0.5 * mean_sq_diff;
      count[bin] += 1;
    }
  }
  std::vector<VariogramBin> bins;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (count[k] == 0) continue;
    VariogramBin b;
    b.distance = 0.5 * (bin_edges[k] + bin_edges[k + 1]);
    b.semivariance = acc[k] / static_cast<double>(count[k]);
    b.pairs = count[k];
    bins.push_back(b);
  }
  return bins;
}

namespace {

double gaussian_replicate_negloglik(const Eigen::MatrixXd& sample_cov, double T,
                                    const std::vector<Location>& locations,
                                    const CovarianceModel& model) {
  const Eigen::MatrixXd sigma = build_covariance_matrix(locations, model);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  const double trace = llt.solve(sample_cov).trace();
  return 0.5 * T * (log_det + trace);
}

CovarianceModel auto_init(const ResidualPanel& res, ResidualField field,
                          CovarianceFamily family) {
  const Eigen::MatrixXd& X = field == ResidualField::eta ? res.eta : res.zeta;
  const double field_var =
      (X.array() - X.mean()).square().sum() / static_cast<double>(X.size() - 1);
  CovarianceModel init;
  init.family = family;
  init.sill = std::max(field_var, 1e-8);
  init.nugget = 0.05 * init.sill;
  init.range = 0.5;
  const auto bins = empirical_variogram(res, field, default_bin_edges(res.locations));
  if (!bins.empty()) {
    // nugget from the first-bin intercept, range where 63% of the sill is reached
    init.nugget = std::clamp(bins.front().semivariance - 0.5 * field_var, 1e-4 * field_var,
                             0.9 * field_var);
    for (const auto& b : bins) {
      if (b.semivariance >= 0.632 * field_var) {
        init.range = std::max(b.distance, 1e-3);
        break;
      }
    }
    init.sill = std::max(field_var - init.nugget, 1e-8);
  }
  return init;
}

}  // namespace

CovarianceFitResult fit_covariance_mle(const ResidualPanel& res, ResidualField field,
                                       CovarianceFamily family, const CovarianceModel& init) {
  if (res.T() < 10) throw std::invalid_argument("fit_covariance_mle: need >= 10 time points");
  if (res.m() < 3) throw std::invalid_argument("fit_covariance_mle: need >= 3 locations");
  const Eigen::MatrixXd& X = field == ResidualField::eta ? res.eta : res.zeta;
  const double T = static_cast<double>(X.rows());
  const Eigen::MatrixXd sample_cov = X.transpose() * X / T;

  CovarianceModel start = init.sill > 0.0 ? init : auto_init(res, field, family);
  start.family = family;
  if (start.nugget <= 0.0) start.nugget = 1e-4 * start.sill;
  if (init.sill > 0.0 && init.family == CovarianceFamily::matern) {
    start.smoothness = init.smoothness;
  }

  auto decode = [&](const Eigen::VectorXd& x) {
    CovarianceModel model = start;
    model.sill = std::exp(std::clamp(x[0], -40.0, 40.0));
    model.range = std::exp(std::clamp(x[1], -40.0, 40.0));
    model.nugget = std::exp(std::clamp(x[2], -40.0, 40.0));
    return model;
  };
  auto objective = [&](const Eigen::VectorXd& x) {
    return gaussian_replicate_negloglik(sample_cov, T, res.locations, decode(x));
  };

  Eigen::VectorXd x0(3);
  x0 << std::log(start.sill), std::log(start.range), std::log(start.nugget);
  NelderMeadOptions nm;
  nm.f_tol = 1e-10;
  nm.restarts = 2;
  const NelderMeadResult opt = nelder_mead(objective, x0, nm);

  CovarianceFitResult result;
  result.model = decode(opt.x);
  result.neg_loglik = opt.f;
  result.converged = opt.converged && std::isfinite(opt.f);
  result.iterations = opt.iterations;

  // observed-information standard errors in the original parameters
  auto nll_params = [&](const Eigen::VectorXd& v) {
    CovarianceModel model = result.model;
    model.sill = v[0];
    model.range = v[1];
    model.nugget = std::max(v[2], 0.0);
    if (model.sill <= 0.0 || model.range <= 0.0) return std::numeric_limits<double>::infinity();
    return gaussian_replicate_negloglik(sample_cov, T, res.locations, model);
  };
  Eigen::Vector3d theta(result.model.sill, result.model.range, result.model.nugget);
  Eigen::Matrix3d hessian;
  const double f0 = nll_params(theta);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double hi = 1e-4 * std::max(std::abs(theta[i]), 1e-4);
      const double hj = 1e-4 * std::max(std::abs(theta[j]), 1e-4);
      Eigen::Vector3d v = theta;
      if (i == j) {
        v[i] = theta[i] + hi;
        const double fp = nll_params(v);
        v[i] = theta[i] - hi;
        const double fm = nll_params(v);
        hessian(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
      } else {
        v = theta; v[i] += hi; v[j] += hj; const double fpp = nll_params(v);
        v = theta; v[i] += hi; v[j] -= hj; const double fpm = nll_params(v);
        v = theta; v[i] -= hi; v[j] += hj; const double fmp = nll_params(v);
        v = theta; v[i] -= hi; v[j] -= hj; const double fmm = nll_params(v);
        hessian(i, j) = hessian(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      }
    }
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(hessian);
  if (lu.isInvertible()) {
    const Eigen::Matrix3d cov = lu.inverse();
    for (int i = 0; i < 3; ++i) {
      result.std_errors[static_cast<std::size_t>(i)] =
          cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) : std::numeric_limits<double>::quiet_NaN();
      result.z_scores[static_cast<std::size_t>(i)] =
          theta[i] / result.std_errors[static_cast<std::size_t>(i)];
    }
  } else {
    result.std_errors.fill(std::numeric_limits<double>::quiet_NaN());
    result.z_scores.fill(std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

CovarianceModel zeta_model_from_eta(const CovarianceModel& eta_model, double mean_sigma4) {
  CovarianceModel zeta = eta_model;
  const double s = eta_model.sill;
  const double n = eta_model.nugget;
  zeta.sill = 2.0 * s * s * mean_sigma4;
  zeta.nugget = 2.0 * ((s + n) * (s + n) - s * s) * mean_sigma4;
  zeta.range = eta_model.range / 2.0;  // exact for the exponential family
  return zeta;
}

}  // namespace stgarch
