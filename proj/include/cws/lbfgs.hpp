#pragma once

// Limited-memory BFGS minimiser with a backtracking (Armijo) line search.

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace cws {

struct LbfgsOptions {
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // relative change of the objective
  std::size_t memory = 10;
  double armijo = 1e-4;
  std::size_t max_backtracks = 40;
};

struct LbfgsResult {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Objective after the initial evaluation and after every accepted step.
  std::vector<double> trace;
};

// Evaluates f(x) and writes its gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

inline LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double>& x,
                                  const LbfgsOptions& options) {
  const std::size_t n = x.size();
  const auto dot = [](std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  };

  LbfgsResult result;
  std::vector<double> grad(n), dir(n), x_new(n), grad_new(n);
  double fx = f(x, grad);
  result.trace.push_back(fx);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  std::vector<double> alpha(options.memory);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    if (std::sqrt(dot(grad, grad)) < 1e-12) {
      result.converged = true;
      break;
    }
    // Two-loop recursion: dir = -H * grad.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * dot(history[k].s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * history[k].y[i];
    }
    if (!history.empty()) {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * dot(history[k].y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * history[k].s[i];
    }

    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      history.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = dot(grad, dir);
    }
    double step = history.empty() ? 1.0 / std::max(1.0, std::sqrt(-slope)) : 1.0;

    bool accepted = false;
    double f_new = fx;
    for (std::size_t b = 0; b < options.max_backtracks; ++b) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
      f_new = f(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= fx + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No further decrease representable along the search direction.
      result.converged = true;
      break;
    }

    Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - x[i];
      pair.y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-16) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (history.size() > options.memory) history.pop_front();
    }

    const double change = std::abs(fx - f_new) / std::max(std::abs(f_new), 1e-12);
    x.swap(x_new);
    grad.swap(grad_new);
    fx = f_new;
    result.trace.push_back(fx);
    result.iterations = iter + 1;
    if (change < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.value = fx;
  return result;
}

}  // namespace cws
