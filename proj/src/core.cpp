#include "stgarch/core.hpp"

#include <sstream>
#include <stdexcept>

namespace stgarch {

ValidationReport validate_parameters(const ParameterPoint& point,
                                     const ConstraintConfig& bounds) {
  ValidationReport report;
  auto add = [&](const std::string& msg) { report.violations.push_back(msg); };

  if (!std::isfinite(point.omega)) add("omega not finite");
  for (std::size_t i = 0; i < point.alpha.size(); ++i) {
    if (!std::isfinite(point.alpha[i])) add("alpha[" + std::to_string(i + 1) + "] not finite");
    else if (point.alpha[i] < 0.0) add("alpha[" + std::to_string(i + 1) + "] negative");
  }
  for (std::size_t j = 0; j < point.beta.size(); ++j) {
    if (!std::isfinite(point.beta[j])) add("beta[" + std::to_string(j + 1) + "] not finite");
    else if (point.beta[j] < 0.0) add("beta[" + std::to_string(j + 1) + "] negative");
  }
  if (!report.ok()) return report;

  if (point.omega < bounds.rho1) {
    std::ostringstream os;
    os << "omega below rho1: " << point.omega << " < " << bounds.rho1;
    add(os.str());
  }
  if (point.omega > bounds.rho2) {
    std::ostringstream os;
    os << "omega above rho2: " << point.omega << " > " << bounds.rho2;
    add(os.str());
  }
  const double s = point.persistence();
  if (s > 1.0 - bounds.gamma_margin) {
    std::ostringstream os;
    os << "stationarity margin violated: sum(alpha)+sum(beta) = " << s
       << " > " << 1.0 - bounds.gamma_margin;
    add(os.str());
  }
  return report;
}

double unconditional_variance(const ParameterPoint& point) {
  double s = 0.0;
  for (double d : point.delta()) s += d;
  if (s >= 1.0) {
    throw std::domain_error("unconditional_variance: sum(delta) >= 1");
  }
  return point.omega / (1.0 - s);
}

double CovarianceModel::correlation(double h) const {
  if (h <= 0.0) return 1.0;
  const double u = h / range;
  switch (family) {
    case CovarianceFamily::exponential:
      return std::exp(-u);
    case CovarianceFamily::matern: {
      // 2^{1-nu}/Gamma(nu) * (sqrt(2 nu) u)^nu * K_nu(sqrt(2 nu) u)
      const double nu = smoothness;
      const double a = std::sqrt(2.0 * nu) * u;
      if (a > 700.0) return 0.0;  // K_nu underflows
      const double c = std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(a, nu) *
                       std::cyl_bessel_k(nu, a);
      // guard against rounding just above 1 near the origin
      return std::min(c, 1.0);
    }
  }
  return 0.0;
}

const char* family_name(CovarianceFamily f) {
  return f == CovarianceFamily::exponential ? "exponential" : "matern";
}

std::optional<CovarianceFamily> parse_family(const std::string& name) {
  if (name == "exponential") return CovarianceFamily::exponential;
  if (name == "matern") return CovarianceFamily::matern;
  return std::nullopt;
}

void Panel::check() const {
  if (static_cast<std::size_t>(values.cols()) != locations.size()) {
    throw std::invalid_argument("Panel: values columns do not match locations");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("Panel: non-finite observation");
  }
  if (volatility) {
    if (volatility->rows() != values.rows() || volatility->cols() != values.cols()) {
      throw std::invalid_argument("Panel: volatility dimensions do not match values");
    }
    if ((volatility->array() <= 0.0).any()) {
      throw std::invalid_argument("Panel: non-positive volatility entry");
    }
  }
}

}  // namespace stgarch
