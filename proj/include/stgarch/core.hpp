#ifndef STGARCH_CORE_HPP
#define STGARCH_CORE_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stgarch {

/// A point in the (dimensionless) spatial domain, typically [0,1]^2.
struct Location {
  double x = 0.0;
  double y = 0.0;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Location& a, const Location& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Chebyshev distance, used by the local-approximation bound.
inline double distance_inf(const Location& a, const Location& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

/// GARCH lag orders. r = max(p, q) is always derived.
struct GarchOrder {
  int p = 1;  // lags of sigma^2
  int q = 1;  // lags of Z^2

  int r() const { return std::max(p, q); }
  int n_params() const { return 1 + q + p; }
};

/// Local GARCH law at one location: (omega, alpha_1..alpha_q, beta_1..beta_p).
struct ParameterPoint {
  double omega = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;

  GarchOrder order() const {
    return GarchOrder{static_cast<int>(beta.size()), static_cast<int>(alpha.size())};
  }

  double persistence() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    for (double b : beta) s += b;
    return s;
  }

  /// delta_i = alpha_i + beta_i, zero-padded to r = max(p, q).
  std::vector<double> delta() const {
    const int r = order().r();
    std::vector<double> d(static_cast<std::size_t>(r), 0.0);
    for (std::size_t i = 0; i < alpha.size(); ++i) d[i] += alpha[i];
    for (std::size_t j = 0; j < beta.size(); ++j) d[j] += beta[j];
    return d;
  }
};

/// Constraint configuration for the admissible parameter set.
struct ConstraintConfig {
  double rho1 = 1e-6;          // lower bound on omega
  double rho2 = 1e6;           // upper bound on omega
  double gamma_margin = 1e-3;  // stationarity margin: sum(alpha)+sum(beta) <= 1 - gamma
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_parameters(const ParameterPoint& point,
                                     const ConstraintConfig& bounds = {});

/// Unconditional variance C(s) = omega / (1 - sum(delta)).
/// Throws std::domain_error if sum(delta) >= 1.
double unconditional_variance(const ParameterPoint& point);

/// Stationary covariance family for the innovation field.
enum class CovarianceFamily { exponential, matern };

struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::exponential;
  double sill = 1.0;        // partial sill sigma^2
  double range = 1.0;       // length scale theta
  double nugget = 0.0;      // tau^2
  double smoothness = 1.5;  // nu, Matern only

  /// Correlation at distance h (unit sill, no nugget).
  double correlation(double h) const;

  /// Covariance at distance h; the nugget contributes only at h == 0.
  double operator()(double h) const {
    double c = sill * correlation(h);
    if (h == 0.0) c += nugget;
    return c;
  }

  bool valid() const {
    return sill > 0.0 && range > 0.0 && nugget >= 0.0 &&
           (family != CovarianceFamily::matern || smoothness > 0.0);
  }
};

const char* family_name(CovarianceFamily f);
std::optional<CovarianceFamily> parse_family(const std::string& name);

/// T x m observation panel bound to m locations.
struct Panel {
  std::vector<Location> locations;
  Eigen::MatrixXd values;                    // T x m
  std::optional<Eigen::MatrixXd> volatility; // T x m, sigma_t^2, if known
  std::vector<std::string> labels;           // optional per-location names

  Eigen::Index T() const { return values.rows(); }
  Eigen::Index m() const { return values.cols(); }

  /// Checks the dimension and positivity invariants; throws std::invalid_argument.
  void check() const;
};

}  // namespace stgarch

#endif
