#ifndef STGARCH_NELDERMEAD_HPP
#define STGARCH_NELDERMEAD_HPP

#include <functional>

#include <Eigen/Dense>

namespace stgarch {

struct NelderMeadOptions {
  int max_iter = 4000;
  double f_tol = 1e-9;        // simplex spread tolerance on objective values
  double init_step = 0.25;    // initial simplex edge length
  int restarts = 1;           // fresh-simplex restarts from the best point
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex minimisation of an unconstrained objective.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& options = {});

/// Central finite-difference gradient.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const Eigen::VectorXd& x, double step = 1e-6);

}  // namespace stgarch

#endif
