#include "stgarch/estimate.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "stgarch/neldermead.hpp"
#include "stgarch/simulate.hpp"

namespace stgarch {

const char* kernel_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::gaussian: return "gaussian";
  }
  return "?";
}

double kernel_value(KernelFamily family, double u) {
  switch (family) {
    case KernelFamily::uniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelFamily::epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::gaussian:
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
  }
  return 0.0;
}

double kernel_weight(const KernelSpec& spec, const Location& target, const Location& site) {
  if (spec.bandwidth <= 0.0) throw std::invalid_argument("kernel_weight: bandwidth must be > 0");
  const double b = spec.bandwidth;
  const double kx = kernel_value(spec.family, (target.x - site.x) / b);
  const double ky = kernel_value(spec.family, (target.y - site.y) / b);
  return kx * ky / (b * b);
}

namespace {

double init_value(const ParameterPoint& point, const VarianceInit& init) {
  if (init.mode == VarianceInit::Mode::fixed) return init.value;
  return unconditional_variance(point);
}

}  // namespace

std::vector<double> volatility_filter(const ParameterPoint& point,
                                      const std::vector<double>& series,
                                      const VarianceInit& init) {
  const auto T = static_cast<std::ptrdiff_t>(series.size());
  if (T < 1) throw std::invalid_argument("volatility_filter: empty series");
  const int q = static_cast<int>(point.alpha.size());
  const int p = static_cast<int>(point.beta.size());
  const double v0 = init_value(point, init);
  std::vector<double> sigma2(series.size());
  for (std::ptrdiff_t t = 0; t < T; ++t) {
    double var = point.omega;
    for (int i = 1; i <= q; ++i) {
      const double z = (t - i >= 0) ? series[static_cast<std::size_t>(t - i)] : 0.0;
      const double z2 = (t - i >= 0) ? z * z : v0;
      var += point.alpha[static_cast<std::size_t>(i - 1)] * z2;
    }
    for (int j = 1; j <= p; ++j) {
      const double s2 = (t - j >= 0) ? sigma2[static_cast<std::size_t>(t - j)] : v0;
      var += point.beta[static_cast<std::size_t>(j - 1)] * s2;
    }
    sigma2[static_cast<std::size_t>(t)] = var;
  }
  return sigma2;
}

FilterWithGradient volatility_filter_gradient(const ParameterPoint& point,
                                              const std::vector<double>& series,
                                              const VarianceInit& init) {
  const auto T = static_cast<std::ptrdiff_t>(series.size());
  const int q = static_cast<int>(point.alpha.size());
  const int p = static_cast<int>(point.beta.size());
  const int n = 1 + q + p;

  const double v0 = init_value(point, init);
  Eigen::VectorXd grad_v0 = Eigen::VectorXd::Zero(n);
  if (init.mode == VarianceInit::Mode::unconditional) {
    const double s = point.persistence();
    const double inv = 1.0 / (1.0 - s);
    grad_v0[0] = inv;
    for (int k = 1; k < n; ++k) grad_v0[k] = point.omega * inv * inv;
  }

  FilterWithGradient out;
  out.sigma2.resize(series.size());
  out.gradient.resize(T, n);
  for (std::ptrdiff_t t = 0; t < T; ++t) {
    double var = point.omega;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g[0] = 1.0;
    for (int i = 1; i <= q; ++i) {
      double z2;
      if (t - i >= 0) {
        const double z = series[static_cast<std::size_t>(t - i)];
        z2 = z * z;
      } else {
        z2 = v0;
        g += point.alpha[static_cast<std::size_t>(i - 1)] * grad_v0;
      }
      var += point.alpha[static_cast<std::size_t>(i - 1)] * z2;
      g[i] += z2;
    }
    for (int j = 1; j <= p; ++j) {
      const double beta_j = point.beta[static_cast<std::size_t>(j - 1)];
      if (t - j >= 0) {
        var += beta_j * out.sigma2[static_cast<std::size_t>(t - j)];
        g += beta_j * out.gradient.row(t - j).transpose();
        g[1 + q + j - 1] += out.sigma2[static_cast<std::size_t>(t - j)];
      } else {
        var += beta_j * v0;
        g += beta_j * grad_v0;
        g[1 + q + j - 1] += v0;
      }
    }
    out.sigma2[static_cast<std::size_t>(t)] = var;
    out.gradient.row(t) = g.transpose();
  }
  return out;
}

namespace {

struct SupportedSite {
  Eigen::Index index;
  double weight;
  std::vector<double> series;
};

std::vector<SupportedSite> supported_sites(const Panel& panel, const Location& target,
                                           const KernelSpec& spec) {
  std::vector<SupportedSite> sites;
  for (Eigen::Index u = 0; u < panel.m(); ++u) {
    const double w = kernel_weight(spec, target, panel.locations[static_cast<std::size_t>(u)]);
    if (w > 0.0) {
      std::vector<double> col(static_cast<std::size_t>(panel.T()));
      Eigen::VectorXd::Map(col.data(), panel.T()) = panel.values.col(u);
      sites.push_back({u, w, std::move(col)});
    }
  }
  return sites;
}

double weighted_criterion(const std::vector<SupportedSite>& sites, const ParameterPoint& point,
                          const GarchOrder& order, Eigen::Index m, Eigen::Index T) {
  const int p = order.p;
  const double Tprime = static_cast<double>(T - p - 1);
  double total = 0.0;
  for (const auto& site : sites) {
    const auto sigma2 = volatility_filter(point, site.series);
    double acc = 0.0;
    for (Eigen::Index t = p; t < T; ++t) {
      const double s2 = sigma2[static_cast<std::size_t>(t)];
      const double z = site.series[static_cast<std::size_t>(t)];
      acc += 0.5 * (std::log(s2) + z * z / s2);
    }
    total += site.weight * acc;
  }
  return total / (static_cast<double>(m) * Tprime);
}

// Unconstrained reparameterisation: omega = rho1 + exp(x0); (alpha, beta) via
// a logistic simplex with budget B = 1 - gamma_margin, so every image point
// satisfies the stationarity margin strictly.
ParameterPoint decode(const Eigen::VectorXd& x, const GarchOrder& order,
                      const ConstraintConfig& bounds) {
  const int q = order.q;
  const int p = order.p;
  const double budget = 1.0 - bounds.gamma_margin;
  ParameterPoint point;
  point.omega = bounds.rho1 + std::exp(std::clamp(x[0], -45.0, 45.0));
  double s = 0.0;
  std::vector<double> y(static_cast<std::size_t>(q + p));
  for (int k = 0; k < q + p; ++k) {
    y[static_cast<std::size_t>(k)] = std::exp(std::clamp(x[1 + k], -45.0, 45.0));
    s += y[static_cast<std::size_t>(k)];
  }
  const double scale = budget / (1.0 + s);
  point.alpha.resize(static_cast<std::size_t>(q));
  point.beta.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < q; ++i) point.alpha[static_cast<std::size_t>(i)] = scale * y[static_cast<std::size_t>(i)];
  for (int j = 0; j < p; ++j) point.beta[static_cast<std::size_t>(j)] = scale * y[static_cast<std::size_t>(q + j)];
  return point;
}

Eigen::VectorXd encode(const ParameterPoint& point, const ConstraintConfig& bounds) {
  const int q = static_cast<int>(point.alpha.size());
  const int p = static_cast<int>(point.beta.size());
  const double budget = 1.0 - bounds.gamma_margin;
  Eigen::VectorXd x(1 + q + p);
  x[0] = std::log(std::max(point.omega - bounds.rho1, 1e-12));
  const double tau = std::min(point.persistence(), budget * (1.0 - 1e-10));
  const double denom = budget - tau;
  for (int i = 0; i < q; ++i) {
    x[1 + i] = std::log(std::max(point.alpha[static_cast<std::size_t>(i)] / denom, 1e-10));
  }
  for (int j = 0; j < p; ++j) {
    x[1 + q + j] = std::log(std::max(point.beta[static_cast<std::size_t>(j)] / denom, 1e-10));
  }
  return x;
}

}  // namespace

double local_neg_loglik(const Panel& panel, const Location& target, const ParameterPoint& point,
                        const KernelSpec& spec, const GarchOrder& order) {
  panel.check();
  if (panel.T() < order.p + 2) throw std::invalid_argument("local_neg_loglik: series too short");
  const auto sites = supported_sites(panel, target, spec);
  if (sites.empty()) {
    throw std::invalid_argument("local_neg_loglik: no sites inside the kernel support");
  }
  return weighted_criterion(sites, point, order, panel.m(), panel.T());
}

LocalFit fit_local(const Panel& panel, const Location& target, const KernelSpec& spec,
                   const GarchOrder& order, const OptimizerConfig& opt) {
  panel.check();
  if (panel.T() < order.p + 2) throw std::invalid_argument("fit_local: series too short");
  const auto sites = supported_sites(panel, target, spec);
  if (sites.empty()) {
    throw std::invalid_argument("fit_local: no sites inside the kernel support");
  }
  double mass = 0.0;
  for (const auto& s : sites) mass += s.weight;

  const Eigen::Index m = panel.m();
  const Eigen::Index T = panel.T();
  auto objective = [&](const Eigen::VectorXd& x) {
    return weighted_criterion(sites, decode(x, order, opt.bounds), order, m, T);
  };

  // moment start: weighted long-run variance plus a mildly persistent profile
  double c_hat = 0.0;
  {
    double num = 0.0;
    for (const auto& s : sites) {
      double acc = 0.0;
      for (double z : s.series) acc += z * z;
      num += s.weight * acc / static_cast<double>(T);
    }
    c_hat = std::max(num / mass, 1e-8);
  }
  ParameterPoint start;
  start.alpha.assign(static_cast<std::size_t>(order.q), 0.10 / order.q);
  start.beta.assign(static_cast<std::size_t>(order.p), 0.50 / order.p);
  start.omega = std::max(c_hat * (1.0 - start.persistence()), opt.bounds.rho1 * 2.0);
  const Eigen::VectorXd x0 = encode(start, opt.bounds);

  NelderMeadOptions nm;
  nm.max_iter = opt.max_iter;
  nm.f_tol = opt.tol;
  nm.restarts = 2;

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> perturb(0.0, 0.5);

  NelderMeadResult best;
  best.f = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (int k = 0; k < std::max(opt.n_starts, 1); ++k) {
    Eigen::VectorXd xk = x0;
    if (k > 0) {
      for (Eigen::Index i = 0; i < xk.size(); ++i) xk[i] += perturb(rng);
    }
    NelderMeadResult res = nelder_mead(objective, xk, nm);
    total_iterations += res.iterations;
    if (res.f < best.f) best = res;
  }

  const Eigen::VectorXd grad = fd_gradient(objective, best.x);
  const bool converged = best.converged && grad.norm() < opt.gtol;

  LocalFit fit;
  fit.target = target;
  fit.estimate = decode(best.x, order, opt.bounds);
  fit.neg_loglik = best.f;
  fit.effective_weight_mass = mass;
  fit.converged = converged;
  fit.iterations = total_iterations;
  if (converged) {
    try {
      fit.std_errors = local_fit_stderr(panel, fit, spec, order);
    } catch (const std::exception&) {
      fit.std_errors.clear();  // singular information matrix; fit itself stands
    }
  }
  return fit;
}

std::vector<double> local_fit_stderr(const Panel& panel, const LocalFit& fit,
                                     const KernelSpec& spec, const GarchOrder& order) {
  if (!fit.converged) throw std::invalid_argument("local_fit_stderr: fit did not converge");
  const auto sites = supported_sites(panel, fit.target, spec);
  if (sites.empty()) throw std::invalid_argument("local_fit_stderr: no supported sites");

  const int n = order.n_params();
  const int p = order.p;
  const Eigen::Index T = panel.T();
  const double Tprime = static_cast<double>(T - p - 1);

  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
  double mass = 0.0;
  double sq_mass = 0.0;
  // weighted moments of eta^2 for Var(eta^2)
  double w_sum = 0.0, e2_sum = 0.0, e4_sum = 0.0;
  for (const auto& site : sites) {
    const auto fg = volatility_filter_gradient(fit.estimate, site.series);
    mass += site.weight;
    sq_mass += site.weight * site.weight;
    for (Eigen::Index t = p; t < T; ++t) {
      const double s2 = fg.sigma2[static_cast<std::size_t>(t)];
      const Eigen::VectorXd g = fg.gradient.row(t).transpose();
      info.noalias() += (site.weight / (s2 * s2)) * (g * g.transpose());
      const double e2 = site.series[static_cast<std::size_t>(t)] *
                        site.series[static_cast<std::size_t>(t)] / s2;
      w_sum += site.weight;
      e2_sum += site.weight * e2;
      e4_sum += site.weight * e2 * e2;
    }
  }
  info /= 2.0 * mass;
  const double mean_e2 = e2_sum / w_sum;
  const double var_eta2 = std::max(e4_sum / w_sum - mean_e2 * mean_e2, 0.0);
  // squared-mass normalisation keeps the variance invariant to the kernel's
  // overall scale (only relative site weights matter)
  const double mu2 = static_cast<double>(T - p) * sq_mass / (2.0 * mass * mass);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 1.0))) {
    std::ostringstream os;
    os << "local_fit_stderr: singular information matrix, condition number "
       << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    throw std::runtime_error(os.str());
  }
  const Eigen::MatrixXd cov = mu2 * var_eta2 * info.inverse() / Tprime;
  std::vector<double> se(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) se[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0));
  return se;
}

namespace {

SurfaceFit fit_surface_impl(const Panel& panel, const std::vector<Location>& targets,
                            const KernelSpec& spec, const GarchOrder& order,
                            const OptimizerConfig& opt, bool parallel) {
  SurfaceFit out;
  out.targets = targets;
  out.fits.resize(targets.size());
  out.errors.resize(targets.size());
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out.fits[static_cast<std::size_t>(i)] =
          fit_local(panel, targets[static_cast<std::size_t>(i)], spec, order, opt);
    } catch (const std::exception& e) {
      out.errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  return out;
}

}  // namespace

SurfaceFit fit_surface(const Panel& panel, const std::vector<Location>& targets,
                       const KernelSpec& spec, const GarchOrder& order,
                       const OptimizerConfig& opt) {
  return fit_surface_impl(panel, targets, spec, order, opt, true);
}

SurfaceFit fit_surface_ref(const Panel& panel, const std::vector<Location>& targets,
                           const KernelSpec& spec, const GarchOrder& order,
                           const OptimizerConfig& opt) {
  return fit_surface_impl(panel, targets, spec, order, opt, false);
}

}  // namespace stgarch
