#ifndef STGARCH_ESTIMATE_HPP
#define STGARCH_ESTIMATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stgarch/core.hpp"

namespace stgarch {

enum class KernelFamily { uniform, epanechnikov, gaussian };

const char* kernel_name(KernelFamily f);

/// Product kernel W_b(s) = b^-2 K(x/b) K(y/b); each univariate K integrates to 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::uniform;
  double bandwidth = 0.25;
};

/// Univariate kernel value K(u).
double kernel_value(KernelFamily family, double u);

/// Spatial weight of a site relative to the target location.
double kernel_weight(const KernelSpec& spec, const Location& target, const Location& site);

/// Pre-sample initialisation of the volatility recursion.
struct VarianceInit {
  enum class Mode { unconditional, fixed };
  Mode mode = Mode::unconditional;
  double value = 0.0;  // used when mode == fixed

  static VarianceInit unconditional() { return {}; }
  static VarianceInit fixed(double v) { return {Mode::fixed, v}; }
};

/// sigma_t^2 recursion over one series; pre-sample Z^2 and sigma^2 are both
/// set to the init value.
std::vector<double> volatility_filter(const ParameterPoint& point,
                                      const std::vector<double>& series,
                                      const VarianceInit& init = {});

/// Filter plus forward-recursion gradients of sigma_t^2 with respect to
/// (omega, alpha_1..alpha_q, beta_1..beta_p). Under the unconditional init the
/// pre-sample values depend on the parameters; that dependence is included.
struct FilterWithGradient {
  std::vector<double> sigma2;  // length T
  Eigen::MatrixXd gradient;    // T x (1+q+p)
};
FilterWithGradient volatility_filter_gradient(const ParameterPoint& point,
                                              const std::vector<double>& series,
                                              const VarianceInit& init = {});

struct OptimizerConfig {
  double tol = 1e-9;      // objective-decrease tolerance
  double gtol = 1e-5;     // finite-difference gradient norm at the optimum
  int n_starts = 3;       // perturbed multi-start
  int max_iter = 4000;
  std::uint64_t seed = 0x5747u;  // perturbation stream for the extra starts
  ConstraintConfig bounds;
};

struct LocalFit {
  Location target;
  ParameterPoint estimate;
  double neg_loglik = 0.0;
  std::vector<double> std_errors;  // empty when not available
  double effective_weight_mass = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Kernel-weighted quasi-likelihood criterion at a candidate parameter point.
/// Throws std::invalid_argument when no site has positive weight.
double local_neg_loglik(const Panel& panel, const Location& target, const ParameterPoint& point,
                        const KernelSpec& spec, const GarchOrder& order);

/// Minimises local_neg_loglik via an unconstrained reparameterisation
/// (shifted log for omega, logistic simplex for (alpha, beta) under the
/// stationarity budget). Deterministic given config.
LocalFit fit_local(const Panel& panel, const Location& target, const KernelSpec& spec,
                   const GarchOrder& order, const OptimizerConfig& opt = {});

/// Plug-in standard errors for a converged fit. Throws std::runtime_error with
/// the condition number when the information matrix is singular.
std::vector<double> local_fit_stderr(const Panel& panel, const LocalFit& fit,
                                     const KernelSpec& spec, const GarchOrder& order);

struct SurfaceFit {
  std::vector<Location> targets;
  std::vector<LocalFit> fits;        // aligned with targets; valid iff errors[i] empty
  std::vector<std::string> errors;   // aligned with targets

  std::size_t n_failed() const {
    std::size_t n = 0;
    for (const auto& e : errors) n += !e.empty();
    return n;
  }
};

/// Independent fit_local per target; per-target failures are isolated.
SurfaceFit fit_surface(const Panel& panel, const std::vector<Location>& targets,
                       const KernelSpec& spec, const GarchOrder& order,
                       const OptimizerConfig& opt = {});

/// Serial reference for fit_surface (kept for testing and benchmarks).
SurfaceFit fit_surface_ref(const Panel& panel, const std::vector<Location>& targets,
                           const KernelSpec& spec, const GarchOrder& order,
                           const OptimizerConfig& opt = {});

}  // namespace stgarch

#endif
