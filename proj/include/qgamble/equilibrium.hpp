// equilibrium.hpp
// Maximin analysis of the gambling game and the (epsilon, eta) sweeps.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgamble/protocol.hpp"

namespace qgamble {

template <typename Scalar = double>
struct BestResponse {
  Scalar epsilon_star;
  Scalar value;  // Bob's expected gain at epsilon_star
};

template <typename Scalar = double>
struct EquilibriumResult {
  Scalar eta_tilde;
  Scalar guaranteed_gain;
  Scalar alice_best_epsilon;
  Scalar tolerance;
};

template <typename Scalar>
struct Minimum {
  Scalar x;
  Scalar fx;
};

/// Golden-section search for the minimizer of a unimodal function on
/// [lo, hi]. The endpoints are compared against the interior result so a
/// boundary minimum is returned exactly.
template <typename Scalar, typename F>
Minimum<Scalar> golden_section_minimize(F&& f, Scalar lo, Scalar hi, Scalar tol) {
  using std::sqrt;
  if (!(tol > Scalar(0))) throw DomainError("tol", "tolerance must be positive");
  const Scalar inv_phi = (sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar a = lo, b = hi;
  Scalar c = b - inv_phi * (b - a);
  Scalar d = a + inv_phi * (b - a);
  Scalar fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  Minimum<Scalar> best{(a + b) / Scalar(2), f((a + b) / Scalar(2))};
  for (Scalar edge : {lo, hi}) {
    const Scalar fe = f(edge);
    if (fe <= best.fx) best = {edge, fe};
  }
  return best;
}

/// Alice's epsilon minimizing Bob's gain at fixed eta. The gain is convex
/// in epsilon, so golden-section search over [0, 1/2] is exact up to tol.
template <typename Scalar>
BestResponse<Scalar> alice_best_response(const SplittingChoice<Scalar>& splitting,
                                         const GameConfig<Scalar>& config,
                                         Scalar tol = Scalar(1e-6)) {
  auto gain = [&](Scalar eps) {
    return expected_gain(PreparationChoice<Scalar>(eps), splitting, config);
  };
  const auto m = golden_section_minimize(gain, Scalar(0), Scalar(0.5), tol);
  return {m.x, m.fx};
}

/// Bob's worst-case gain g(eta) = min over epsilon.
template <typename Scalar>
Scalar guaranteed_gain(Scalar eta, const GameConfig<Scalar>& config, Scalar eps_tol = Scalar(1e-6)) {
  return alice_best_response(SplittingChoice<Scalar>(eta), config, eps_tol).value;
}

/// Bob's maximin splitting parameter. A 0.01-step scan over [0, 1] locates
/// the best cell; golden-section refinement then runs on the bracketing
/// interval. Smoothness of g in eta is not assumed beyond that bracket.
template <typename Scalar>
EquilibriumResult<Scalar> bob_optimal_eta(const GameConfig<Scalar>& config,
                                          Scalar tol = Scalar(1e-4),
                                          Scalar eps_tol = Scalar(1e-6)) {
  if (!(tol > Scalar(0))) throw DomainError("tol", "tolerance must be positive");
  constexpr int kCoarse = 100;
  auto g = [&](Scalar eta) { return guaranteed_gain(eta, config, eps_tol); };

  int best_i = 0;
  Scalar best_g = g(Scalar(0));
  for (int i = 1; i <= kCoarse; ++i) {
    const Scalar gi = g(Scalar(i) / Scalar(kCoarse));
    if (gi > best_g) {
      best_g = gi;
      best_i = i;
    }
  }
  const Scalar lo = Scalar(std::max(best_i - 1, 0)) / Scalar(kCoarse);
  const Scalar hi = Scalar(std::min(best_i + 1, kCoarse)) / Scalar(kCoarse);
  auto neg_g = [&](Scalar eta) { return -g(eta); };
  auto refined = golden_section_minimize(neg_g, lo, hi, tol);

  Scalar eta_tilde = refined.x;
  if (-refined.fx < best_g) eta_tilde = Scalar(best_i) / Scalar(kCoarse);
  const auto response = alice_best_response(SplittingChoice<Scalar>(eta_tilde), config, eps_tol);
  return {eta_tilde, response.value, response.epsilon_star, tol};
}

/// `n` evenly spaced points from lo to hi inclusive; both endpoints exact.
template <typename Scalar = double>
std::vector<Scalar> linspace(Scalar lo, Scalar hi, int n) {
  if (n < 2) throw DomainError("grid", "grid must have at least 2 points per axis");
  std::vector<Scalar> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * Scalar(i) / Scalar(n - 1);
  out.back() = hi;
  return out;
}

template <typename Scalar = double>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major tables over epsilon (rows) x eta (columns).
template <typename Scalar = double>
struct SweepTable {
  std::vector<Scalar> epsilon;
  std::vector<Scalar> eta;
  Grid<Scalar> p1, p2, p3;
  Grid<Scalar> gain;  // empty unless produced by sweep_gain
  bool has_gain() const { return gain.size() != 0; }
};

namespace detail {
template <typename Scalar>
void check_axis(const std::vector<Scalar>& axis, Scalar hi, const char* name) {
  if (axis.size() < 2)
    throw DomainError(name, std::string(name) + " grid must have at least 2 points");
  for (Scalar v : axis)
    if (!(v >= Scalar(0) && v <= hi))
      throw DomainError(name, std::string(name) + " grid value out of domain");
}
}  // namespace detail

template <typename Scalar>
SweepTable<Scalar> sweep_distribution(const std::vector<Scalar>& epsilon_grid,
                                      const std::vector<Scalar>& eta_grid) {
  detail::check_axis(epsilon_grid, Scalar(0.5), "epsilon");
  detail::check_axis(eta_grid, Scalar(1), "eta");
  const auto rows = static_cast<Eigen::Index>(epsilon_grid.size());
  const auto cols = static_cast<Eigen::Index>(eta_grid.size());
  SweepTable<Scalar> table{epsilon_grid, eta_grid, Grid<Scalar>(rows, cols),
                           Grid<Scalar>(rows, cols), Grid<Scalar>(rows, cols), {}};
  for (Eigen::Index i = 0; i < rows; ++i) {
    const PreparationChoice<Scalar> prep(epsilon_grid[i]);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto d = outcome_distribution(prep, SplittingChoice<Scalar>(eta_grid[j]));
      table.p1(i, j) = d.p1;
      table.p2(i, j) = d.p2;
      table.p3(i, j) = d.p3;
    }
  }
  return table;
}

template <typename Scalar>
SweepTable<Scalar> sweep_gain(const GameConfig<Scalar>& config,
                              const std::vector<Scalar>& epsilon_grid,
                              const std::vector<Scalar>& eta_grid) {
  auto table = sweep_distribution(epsilon_grid, eta_grid);
  table.gain.resize(table.p1.rows(), table.p1.cols());
  for (Eigen::Index i = 0; i < table.p1.rows(); ++i)
    for (Eigen::Index j = 0; j < table.p1.cols(); ++j)
      table.gain(i, j) = expected_gain(
          OutcomeDistribution<Scalar>{table.p1(i, j), table.p2(i, j), table.p3(i, j)}, config);
  return table;
}

/// Square sweep with `n` points per axis over the full parameter domain.
inline SweepTable<double> sweep_distribution(int n) {
  return sweep_distribution(linspace(0.0, 0.5, n), linspace(0.0, 1.0, n));
}

inline SweepTable<double> sweep_gain(double punishment, int n) {
  return sweep_gain(GameConfig<double>(punishment), linspace(0.0, 0.5, n), linspace(0.0, 1.0, n));
}

}  // namespace qgamble
