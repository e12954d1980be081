#pragma once

// Independent reference computations used as test oracles. Nothing here calls
// into the library's solvers; only the data types are shared.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "mimic/envs.hpp"

namespace oracle {

// Expected return of a deterministic time-dependent policy act[t * S + s],
// propagated forward through the state distribution.
inline double deterministic_return(const mimic::TabularMDP& mdp,
                                   const std::vector<std::size_t>& act) {
  const std::size_t S = mdp.state_count();
  std::vector<double> d = mdp.initial_distribution();
  double total = 0.0;
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    std::vector<double> next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const std::size_t a = act[t * S + s];
      total += d[s] * mdp.reward(s, a);
      for (std::size_t n = 0; n < S; ++n) next[n] += d[s] * mdp.transition(s, a, n);
    }
    d = next;
  }
  return total;
}

// Best return over every deterministic time-dependent policy. Feasible only for
// tiny instances: A^(S*H) candidates.
inline double exhaustive_optimal_return(const mimic::TabularMDP& mdp) {
  const std::size_t cells = mdp.state_count() * mdp.horizon();
  std::vector<std::size_t> act(cells, 0);
  double best = -INFINITY;
  while (true) {
    best = std::max(best, deterministic_return(mdp, act));
    std::size_t i = 0;
    while (i < cells && ++act[i] == mdp.action_count()) act[i++] = 0;
    if (i == cells) break;
  }
  return best;
}

// Monte-Carlo per-step state visit frequencies under a stochastic table
// probs[(t * S + s) * A + a], simulated with std::discrete_distribution.
struct VisitEstimate {
  std::vector<double> mean;  // H x S
  std::vector<double> se;    // standard error per entry
};

inline VisitEstimate monte_carlo_visits(const mimic::TabularMDP& mdp,
                                        const std::vector<double>& probs, std::size_t n,
                                        std::uint64_t seed) {
  const std::size_t S = mdp.state_count(), A = mdp.action_count(), H = mdp.horizon();
  std::mt19937_64 gen(seed);
  std::vector<double> counts(H * S, 0.0);
  const auto& init = mdp.initial_distribution();
  for (std::size_t ep = 0; ep < n; ++ep) {
    std::size_t s = std::discrete_distribution<std::size_t>(init.begin(), init.end())(gen);
    for (std::size_t t = 0; t < H; ++t) {
      counts[t * S + s] += 1.0;
      const double* row = probs.data() + (t * S + s) * A;
      const std::size_t a = std::discrete_distribution<std::size_t>(row, row + A)(gen);
      auto next = mdp.next_distribution(s, a);
      s = std::discrete_distribution<std::size_t>(next.begin(), next.end())(gen);
    }
  }
  VisitEstimate est{std::vector<double>(H * S), std::vector<double>(H * S)};
  for (std::size_t i = 0; i < H * S; ++i) {
    const double p = counts[i] / static_cast<double>(n);
    est.mean[i] = p;
    est.se[i] = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  }
  return est;
}

// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

// Student-t density, CDF by composite Simpson integration from 0, and the 0.975
// quantile by bisection.
inline double t_pdf(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * std::numbers::pi);
  return c * std::pow(1.0 + x * x / df, -(df + 1) / 2);
}

inline double t_cdf(double x, double df) {
  const int n = 20000;
  const double h = x / n;
  double sum = t_pdf(0, df) + t_pdf(x, df);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * t_pdf(i * h, df);
  return 0.5 + sum * h / 3.0;
}

inline double t_quantile_975(double df) {
  double lo = 0.0, hi = 20.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < 0.975 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
