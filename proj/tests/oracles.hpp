// Independent reference computations used only by the test suites.
#pragma once

#include <cmath>
#include <limits>

#include "qgamble/protocol.hpp"

namespace qgamble::oracle {

/// Detector probabilities built step by step from the state vectors:
/// prepare, split, read D1 from |b>, post-select, project on the
/// verification basis.
inline OutcomeDistribution<double> state_vector_distribution(double epsilon, double eta) {
  const PreparationChoice<double> prep(epsilon);
  const SplittingChoice<double> splitting(eta);
  const auto psi = split(prepare(prep), splitting);
  const double p1 = psi(1) * psi(1);
  const double rest = 1.0 - p1;
  if (rest <= 0.0) return {p1, 0.0, 0.0};
  const auto conditional = collapse_after_no_click(psi);
  const auto basis = verification_basis(splitting);
  const double on_a = basis.phi_a.dot(conditional);
  const double on_b = basis.phi_b.dot(conditional);
  return {p1, rest * on_a * on_a, rest * on_b * on_b};
}

/// Bob's gain from payoffs applied to the oracle distribution.
inline double state_vector_gain(double epsilon, double eta, double punishment) {
  const auto d = state_vector_distribution(epsilon, eta);
  return d.p1 + punishment * d.p3 - d.p2;
}

struct GridMin {
  double epsilon;
  double value;
};

/// Exhaustive scan of epsilon over [0, 1/2] with the given step.
inline GridMin grid_min_gain(double eta, double punishment, double step = 1e-5) {
  GridMin best{0.0, std::numeric_limits<double>::infinity()};
  const long n = std::lround(0.5 / step);
  for (long i = 0; i <= n; ++i) {
    const double eps = i == n ? 0.5 : static_cast<double>(i) * step;
    const double g = state_vector_gain(eps, eta, punishment);
    if (g < best.value) best = {eps, g};
  }
  return best;
}

}  // namespace qgamble::oracle
