#include "stgarch/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "stgarch/krige.hpp"

namespace stgarch {

double pooled_bias(const std::vector<double>& errors) {
  if (errors.empty()) return 0.0;
  return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
}

double pooled_rmse(const std::vector<double>& errors) {
  if (errors.empty()) return 0.0;
  double acc = 0.0;
  for (double e : errors) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

namespace {

std::vector<Location> uniform_locations(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Location> sites(static_cast<std::size_t>(n));
  for (auto& s : sites) {
    s.x = unif(rng);
    s.y = unif(rng);
  }
  return sites;
}

MCReplicationRecord run_replication(const MCConfig& config, int n1, int T, std::uint64_t seed) {
  MCReplicationRecord rec;
  rec.seed = seed;
  rec.theta_hat = std::numeric_limits<double>::quiet_NaN();
  try {
    std::mt19937_64 loc_rng(split_seed(seed, 0));
    const std::vector<Location> s1 = uniform_locations(loc_rng, n1);
    const std::vector<Location> s2 = uniform_locations(loc_rng, config.n2);

    const ParameterSurface surface =
        random_bspline_surface(config.order, split_seed(seed, 1), config.surface_config);

    const FieldSampler sampler(s1, config.model, split_seed(seed, 2));
    const Eigen::MatrixXd eta = sampler.sample(T + config.burn_in);
    const Panel panel = simulate_stgarch(surface, eta, s1, config.burn_in);

    KernelSpec kernel;
    kernel.family = config.kernel;
    kernel.bandwidth =
        config.bandwidth > 0.0 ? config.bandwidth : std::pow(static_cast<double>(n1), -0.25);

    if (config.fit_covariance) {
      const SurfaceFit train = fit_surface_ref(panel, s1, kernel, config.order, config.opt);
      // covariance stage on the sites whose local fit converged
      std::vector<Eigen::Index> keep;
      for (Eigen::Index u = 0; u < panel.m(); ++u) {
        if (train.errors[static_cast<std::size_t>(u)].empty() &&
            train.fits[static_cast<std::size_t>(u)].converged) {
          keep.push_back(u);
        }
      }
      if (keep.size() >= 3) {
        Panel sub;
        sub.values.resize(panel.T(), static_cast<Eigen::Index>(keep.size()));
        std::vector<LocalFit> fits;
        for (std::size_t k = 0; k < keep.size(); ++k) {
          sub.values.col(static_cast<Eigen::Index>(k)) = panel.values.col(keep[k]);
          sub.locations.push_back(panel.locations[static_cast<std::size_t>(keep[k])]);
          fits.push_back(train.fits[static_cast<std::size_t>(keep[k])]);
        }
        const ResidualPanel res = extract_residuals(sub, fits);
        const CovarianceFitResult cov =
            fit_covariance_mle(res, ResidualField::eta, config.model.family);
        if (cov.converged) rec.theta_hat = cov.model.range;
      }
    }

    const SurfaceFit pred = fit_surface_ref(panel, s2, kernel, config.order, config.opt);
    for (std::size_t i = 0; i < s2.size(); ++i) {
      if (!pred.errors[i].empty() || !pred.fits[i].converged) {
        ++rec.n_targets_excluded;
        continue;
      }
      const ParameterPoint truth = surface.at(s2[i]);
      const ParameterPoint& est = pred.fits[i].estimate;
      rec.omega_err.push_back(est.omega - truth.omega);
      for (std::size_t k = 0; k < truth.alpha.size(); ++k) {
        rec.alpha_err.push_back(est.alpha[k] - truth.alpha[k]);
      }
      for (std::size_t k = 0; k < truth.beta.size(); ++k) {
        rec.beta_err.push_back(est.beta[k] - truth.beta[k]);
      }
      rec.vol_err.push_back(predict_unconditional(est) - unconditional_variance(truth));
      ++rec.n_targets_used;
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  return rec;
}

}  // namespace

MCReport run_monte_carlo(const MCConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("run_monte_carlo: replications >= 1");
  MCReport report;
  std::uint64_t cell_index = 0;
  for (int n1 : config.n1) {
    for (int T : config.T) {
      const auto start = std::chrono::steady_clock::now();
      MCCell cell;
      cell.n1 = n1;
      cell.T = T;
      cell.records.resize(static_cast<std::size_t>(config.replications));
      const std::uint64_t cell_seed = split_seed(config.seed, cell_index++);
#pragma omp parallel for schedule(dynamic)
      for (int r = 0; r < config.replications; ++r) {
        cell.records[static_cast<std::size_t>(r)] =
            run_replication(config, n1, T, split_seed(cell_seed, static_cast<std::uint64_t>(r)));
      }

      // fixed-order aggregation so concurrency cannot change the report
      std::vector<double> omega_err, alpha_err, beta_err, vol_err, thetas;
      for (const auto& rec : cell.records) {
        if (rec.failed) {
          ++cell.n_failed;
          continue;
        }
        omega_err.insert(omega_err.end(), rec.omega_err.begin(), rec.omega_err.end());
        alpha_err.insert(alpha_err.end(), rec.alpha_err.begin(), rec.alpha_err.end());
        beta_err.insert(beta_err.end(), rec.beta_err.begin(), rec.beta_err.end());
        vol_err.insert(vol_err.end(), rec.vol_err.begin(), rec.vol_err.end());
        cell.n_targets_excluded += rec.n_targets_excluded;
        if (std::isfinite(rec.theta_hat)) thetas.push_back(rec.theta_hat);
      }
      if (cell.n_failed * 10 > config.replications) {
        throw std::runtime_error("run_monte_carlo: more than 10% of replications failed for n1=" +
                                 std::to_string(n1) + ", T=" + std::to_string(T));
      }
      cell.n_replications = config.replications - cell.n_failed;
      cell.bias_omega = pooled_bias(omega_err);
      cell.rmse_omega = pooled_rmse(omega_err);
      cell.bias_alpha = pooled_bias(alpha_err);
      cell.rmse_alpha = pooled_rmse(alpha_err);
      cell.bias_beta = pooled_bias(beta_err);
      cell.rmse_beta = pooled_rmse(beta_err);
      cell.bias_vol = pooled_bias(vol_err);
      cell.rmse_vol = pooled_rmse(vol_err);
      cell.mean_theta_hat = thetas.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : pooled_bias(thetas);
      cell.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman_rho: need two samples of equal size >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> rank(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) rank[idx[k]] = static_cast<double>(k);
    return rank;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n - 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

ApproxReport run_approximation_study(const ParameterSurface& surface, const Location& anchor,
                                     const std::vector<double>& distances,
                                     const ApproxConfig& config) {
  if (distances.empty()) throw std::invalid_argument("run_approximation_study: no distances");
  const double max_dist = *std::max_element(distances.begin(), distances.end());
  const double dir = (anchor.x + max_dist <= 1.0) ? 1.0 : -1.0;
  if (anchor.x + dir * max_dist < 0.0 || anchor.x + dir * max_dist > 1.0) {
    throw std::invalid_argument("run_approximation_study: probe locations leave the domain");
  }
  std::vector<Location> probes;
  for (double d : distances) probes.push_back({anchor.x + dir * d, anchor.y});

  const ParameterPoint anchor_point = surface.at(anchor);
  const int p = static_cast<int>(anchor_point.beta.size());

  ApproxReport report;
  report.distances = distances;
  report.mean_deviation.assign(distances.size(), 0.0);

  for (int rep = 0; rep < config.replications; ++rep) {
    const FieldSampler sampler(probes, config.model, split_seed(config.seed, static_cast<std::uint64_t>(rep)));
    const Eigen::MatrixXd eta = sampler.sample(config.T + config.burn_in);
    const Panel panel = simulate_stgarch(surface, eta, probes, config.burn_in);
    const Eigen::Index T = panel.T();

    for (std::size_t d = 0; d < probes.size(); ++d) {
      const auto u = static_cast<Eigen::Index>(d);
      // zeta and seed values at the probe, from the simulated volatility
      std::vector<double> zeta(static_cast<std::size_t>(T));
      std::vector<double> z2_seed(static_cast<std::size_t>(T));
      for (Eigen::Index t = 0; t < T; ++t) {
        const double z = panel.values(t, u);
        z2_seed[static_cast<std::size_t>(t)] = z * z;
        zeta[static_cast<std::size_t>(t)] = z * z - (*panel.volatility)(t, u);
      }
      // replay the squared-process recursion from the zeta path under a given
      // parameter point; identical code path for truth and approximation, so
      // at distance zero the deviation vanishes bit for bit
      auto replay = [&](const ParameterPoint& point) {
        const auto delta = point.delta();
        const int rr = static_cast<int>(delta.size());
        const int pp = static_cast<int>(point.beta.size());
        std::vector<double> z2(static_cast<std::size_t>(T), 0.0);
        for (Eigen::Index t = 0; t < T; ++t) {
          if (t < pp) {
            z2[static_cast<std::size_t>(t)] = z2_seed[static_cast<std::size_t>(t)];
            continue;
          }
          double v = point.omega + zeta[static_cast<std::size_t>(t)];
          for (int i = 1; i <= rr; ++i) {
            if (t - i >= 0) v += delta[static_cast<std::size_t>(i - 1)] * z2[static_cast<std::size_t>(t - i)];
          }
          for (int j = 1; j <= pp; ++j) {
            if (t - j >= 0) v -= point.beta[static_cast<std::size_t>(j - 1)] * zeta[static_cast<std::size_t>(t - j)];
          }
          z2[static_cast<std::size_t>(t)] = v;
        }
        return z2;
      };
      const std::vector<double> z2_true = replay(surface.at(probes[d]));
      const std::vector<double> z2_approx = replay(anchor_point);
      double acc = 0.0;
      int count = 0;
      for (Eigen::Index t = p; t < T; ++t) {
        acc += std::abs(z2_true[static_cast<std::size_t>(t)] - z2_approx[static_cast<std::size_t>(t)]);
        ++count;
      }
      report.mean_deviation[d] += acc / std::max(count, 1) / config.replications;
    }
  }

  double sxy = 0.0, sxx = 0.0;
  for (std::size_t d = 0; d < distances.size(); ++d) {
    sxy += distances[d] * report.mean_deviation[d];
    sxx += distances[d] * distances[d];
  }
  report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (distances.size() >= 2) {
    report.spearman = spearman_rho(distances, report.mean_deviation);
  }
  return report;
}

}  // namespace stgarch
