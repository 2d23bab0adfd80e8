#include "stgarch/neldermead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace stgarch {

namespace {

NelderMeadResult run_once(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, double init_step, int max_iter,
                          double f_tol) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += init_step;
  for (int i = 0; i <= n; ++i) fv[static_cast<std::size_t>(i)] = f(simplex[static_cast<std::size_t>(i)]);

  // adaptive coefficients (scale with dimension)
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / n;
  const double rho = 0.75 - 0.5 / n;
  const double sigma = 1.0 - 1.0 / n;

  std::vector<int> order(static_cast<std::size_t>(n + 1));
  NelderMeadResult result;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return fv[static_cast<std::size_t>(a)] < fv[static_cast<std::size_t>(b)];
    });
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[static_cast<std::size_t>(n - 1)];

    if (std::abs(fv[static_cast<std::size_t>(worst)] - fv[static_cast<std::size_t>(best)]) <
        f_tol * (1.0 + std::abs(fv[static_cast<std::size_t>(best)]))) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[static_cast<std::size_t>(i)];
    }
    centroid /= n;

    const Eigen::VectorXd reflected = centroid + alpha * (centroid - simplex[static_cast<std::size_t>(worst)]);
    const double fr = f(reflected);
    if (fr < fv[static_cast<std::size_t>(best)]) {
      const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[static_cast<std::size_t>(worst)] = expanded;
        fv[static_cast<std::size_t>(worst)] = fe;
      } else {
        simplex[static_cast<std::size_t>(worst)] = reflected;
        fv[static_cast<std::size_t>(worst)] = fr;
      }
    } else if (fr < fv[static_cast<std::size_t>(second_worst)]) {
      simplex[static_cast<std::size_t>(worst)] = reflected;
      fv[static_cast<std::size_t>(worst)] = fr;
    } else {
      const bool outside = fr < fv[static_cast<std::size_t>(worst)];
      const Eigen::VectorXd base = outside ? reflected : simplex[static_cast<std::size_t>(worst)];
      const Eigen::VectorXd contracted = centroid + rho * (base - centroid);
      const double fc = f(contracted);
      if (fc < std::min(fr, fv[static_cast<std::size_t>(worst)])) {
        simplex[static_cast<std::size_t>(worst)] = contracted;
        fv[static_cast<std::size_t>(worst)] = fc;
      } else {
        const Eigen::VectorXd& xb = simplex[static_cast<std::size_t>(best)];
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[static_cast<std::size_t>(i)] = xb + sigma * (simplex[static_cast<std::size_t>(i)] - xb);
          fv[static_cast<std::size_t>(i)] = f(simplex[static_cast<std::size_t>(i)]);
        }
      }
    }
  }

  const auto best_it = std::min_element(fv.begin(), fv.end());
  result.x = simplex[static_cast<std::size_t>(best_it - fv.begin())];
  result.f = *best_it;
  result.iterations = iter;
  return result;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& options) {
  NelderMeadResult result = run_once(objective, x0, options.init_step, options.max_iter,
                                     options.f_tol);
  for (int r = 0; r < options.restarts; ++r) {
    const double step = options.init_step * std::pow(0.1, r + 1);
    NelderMeadResult next = run_once(objective, result.x, step, options.max_iter, options.f_tol);
    next.iterations += result.iterations;
    next.converged = next.converged && result.converged;
    if (next.f <= result.f) {
      const bool conv = next.converged;
      result = next;
      result.converged = conv;
    } else {
      result.iterations = next.iterations;
    }
  }
  return result;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = objective(xp);
    xp[i] = x[i] - h;
    const double fm = objective(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace stgarch
