#include "stgarch/simulate.hpp"

#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stgarch {

Eigen::MatrixXd build_covariance_matrix_ref(const std::vector<Location>& locations,
                                            const CovarianceModel& model) {
  const auto m = static_cast<Eigen::Index>(locations.size());
  if (!model.valid()) throw std::invalid_argument("build_covariance_matrix: invalid model");
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double h = distance(locations[static_cast<std::size_t>(i)],
                                locations[static_cast<std::size_t>(j)]);
      if (i != j && h == 0.0 && model.nugget == 0.0) {
        throw std::invalid_argument(
            "build_covariance_matrix: duplicate locations with zero nugget");
      }
      const double c = (i == j) ? model.sill + model.nugget : model.sill * model.correlation(h);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  return cov;
}

Eigen::MatrixXd build_covariance_matrix(const std::vector<Location>& locations,
                                        const CovarianceModel& model) {
  const auto m = static_cast<Eigen::Index>(locations.size());
  if (!model.valid()) throw std::invalid_argument("build_covariance_matrix: invalid model");
  Eigen::MatrixXd cov(m, m);
  bool duplicate = false;
#pragma omp parallel for schedule(dynamic, 8) reduction(|| : duplicate)
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double h = distance(locations[static_cast<std::size_t>(i)],
                                locations[static_cast<std::size_t>(j)]);
      if (i != j && h == 0.0 && model.nugget == 0.0) duplicate = true;
      const double c = (i == j) ? model.sill + model.nugget : model.sill * model.correlation(h);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  if (duplicate) {
    throw std::invalid_argument("build_covariance_matrix: duplicate locations with zero nugget");
  }
  return cov;
}

namespace {

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> retry(jittered);
  if (retry.info() != Eigen::Success) {
    throw std::runtime_error("FieldSampler: covariance matrix is not positive definite");
  }
  return retry.matrixL();
}

}  // namespace

FieldSampler::FieldSampler(std::vector<Location> locations, CovarianceModel model,
                           std::uint64_t seed)
    : locations_(std::move(locations)), model_(model), seed_(seed) {
  const double total = model_.sill + model_.nugget;
  if (total <= 0.0) throw std::invalid_argument("FieldSampler: sill + nugget must be positive");
  // unit marginal variance: Var(eta_t(s)) = 1
  CovarianceModel unit = model_;
  unit.sill = model_.sill / total;
  unit.nugget = model_.nugget / total;
  if (unit.sill == 0.0) unit.sill = 1e-300;  // pure-nugget model
  correlation_ = build_covariance_matrix(locations_, unit);
  factor_ = cholesky_with_jitter(correlation_);
}

Eigen::MatrixXd FieldSampler::sample(Eigen::Index T) const {
  if (T < 1) throw std::invalid_argument("FieldSampler::sample: T must be >= 1");
  const auto m = static_cast<Eigen::Index>(locations_.size());
  std::mt19937_64 rng(seed_);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd field(T, m);
  Eigen::VectorXd z(m);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index u = 0; u < m; ++u) z[u] = normal(rng);
    field.row(t) = (factor_ * z).transpose();
  }
  return field;
}

Panel simulate_stgarch(const ParameterSurface& surface, const Eigen::MatrixXd& innovations,
                       const std::vector<Location>& locations, int burn_in) {
  const auto m = static_cast<Eigen::Index>(locations.size());
  const Eigen::Index T = innovations.rows();
  if (innovations.cols() != m) {
    throw std::invalid_argument("simulate_stgarch: innovations/locations dimension mismatch");
  }
  if (burn_in < 0 || burn_in >= T) {
    throw std::invalid_argument("simulate_stgarch: burn_in out of range");
  }
  const Eigen::Index T_out = T - burn_in;
  Panel panel;
  panel.locations = locations;
  panel.values.resize(T_out, m);
  panel.volatility = Eigen::MatrixXd(T_out, m);

#pragma omp parallel for schedule(static)
  for (Eigen::Index u = 0; u < m; ++u) {
    const ParameterPoint point = surface.at(locations[static_cast<std::size_t>(u)]);
    const auto report = validate_parameters(point);
    if (!report.ok()) continue;  // flagged below, outside the parallel region
    const double c0 = unconditional_variance(point);
    const int q = static_cast<int>(point.alpha.size());
    const int p = static_cast<int>(point.beta.size());
    std::vector<double> z2(static_cast<std::size_t>(T), c0);  // lagged Z^2, pre-sample = C(s)
    std::vector<double> s2(static_cast<std::size_t>(T), c0);
    for (Eigen::Index t = 0; t < T; ++t) {
      double var = point.omega;
      for (int i = 1; i <= q; ++i) {
        const double z2lag = (t - i >= 0) ? z2[static_cast<std::size_t>(t - i)] : c0;
        var += point.alpha[static_cast<std::size_t>(i - 1)] * z2lag;
      }
      for (int j = 1; j <= p; ++j) {
        const double s2lag = (t - j >= 0) ? s2[static_cast<std::size_t>(t - j)] : c0;
        var += point.beta[static_cast<std::size_t>(j - 1)] * s2lag;
      }
      s2[static_cast<std::size_t>(t)] = var;
      const double z = std::sqrt(var) * innovations(t, u);
      z2[static_cast<std::size_t>(t)] = z * z;
      if (t >= burn_in) {
        panel.values(t - burn_in, u) = z;
        (*panel.volatility)(t - burn_in, u) = var;
      }
    }
  }

  for (Eigen::Index u = 0; u < m; ++u) {
    const ParameterPoint point = surface.at(locations[static_cast<std::size_t>(u)]);
    const auto report = validate_parameters(point);
    if (!report.ok()) {
      throw std::invalid_argument("simulate_stgarch: surface invalid at location " +
                                  std::to_string(u) + ": " + report.violations.front());
    }
  }
  return panel;
}

ParameterSurface random_bspline_surface(const GarchOrder& order, std::uint64_t seed,
                                        const SurfaceConfig& config) {
  const double worst = order.q * config.alpha_max + order.p * config.beta_max;
  if (worst > 1.0 - config.bounds.gamma_margin) {
    throw std::invalid_argument(
        "random_bspline_surface: coefficient ranges cannot guarantee the stationarity margin");
  }
  if (config.omega_min < config.bounds.rho1 || config.omega_max > config.bounds.rho2 ||
      config.omega_min > config.omega_max || config.alpha_min > config.alpha_max ||
      config.beta_min > config.beta_max || config.alpha_min < 0.0 || config.beta_min < 0.0) {
    throw std::invalid_argument("random_bspline_surface: inconsistent coefficient ranges");
  }

  std::mt19937_64 rng(seed);
  auto draw_grid = [&](double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd grid(config.grid, config.grid);
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
      for (Eigen::Index j = 0; j < grid.cols(); ++j) grid(i, j) = dist(rng);
    return grid;
  };

  ParameterSurface surface;
  surface.order = order;
  surface.omega = TensorSurface::uniform(draw_grid(config.omega_min, config.omega_max),
                                         config.degree);
  for (int i = 0; i < order.q; ++i) {
    surface.alpha.push_back(
        TensorSurface::uniform(draw_grid(config.alpha_min, config.alpha_max), config.degree));
  }
  for (int j = 0; j < order.p; ++j) {
    surface.beta.push_back(
        TensorSurface::uniform(draw_grid(config.beta_min, config.beta_max), config.degree));
  }
  return surface;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) {
  // splitmix64 step on master + k
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace stgarch
