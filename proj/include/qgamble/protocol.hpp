// protocol.hpp
// State-vector mathematics of the quantum gambling protocol.
//
// Basis ordering for a ProtocolState is {|a>, |b>, |b'>}: the particle in
// box A, in box B, and the flag state Bob splits out of box B. All
// amplitudes are real and non-negative.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qgamble {

/// Raised when a parameter falls outside its legal domain. `field()` names
/// the offending parameter so callers can report it.
class DomainError : public std::invalid_argument {
 public:
  DomainError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

template <typename Scalar>
constexpr Scalar kNormTolerance = Scalar(1e-12);

/// Alice's preparation bias, epsilon in [0, 1/2].
template <typename Scalar = double>
class PreparationChoice {
 public:
  explicit PreparationChoice(Scalar epsilon) : epsilon_(epsilon) {
    if (!(epsilon >= Scalar(0) && epsilon <= Scalar(0.5)))
      throw DomainError("epsilon", "epsilon must lie in [0, 0.5], got " +
                                       std::to_string(double(epsilon)));
  }
  Scalar epsilon() const { return epsilon_; }

 private:
  Scalar epsilon_;
};

/// Bob's splitting fraction, eta in [0, 1].
template <typename Scalar = double>
class SplittingChoice {
 public:
  explicit SplittingChoice(Scalar eta) : eta_(eta) {
    if (!(eta >= Scalar(0) && eta <= Scalar(1)))
      throw DomainError("eta", "eta must lie in [0, 1], got " +
                                   std::to_string(double(eta)));
  }
  Scalar eta() const { return eta_; }

 private:
  Scalar eta_;
};

/// Punishment R and the (fixed, one-coin) bet.
template <typename Scalar = double>
class GameConfig {
 public:
  explicit GameConfig(Scalar punishment) : punishment_(punishment) {
    if (!(punishment > Scalar(0)) || !std::isfinite(double(punishment)))
      throw DomainError("R", "punishment R must be positive and finite, got " +
                                 std::to_string(double(punishment)));
  }
  Scalar punishment() const { return punishment_; }
  static constexpr Scalar bet() { return Scalar(1); }

 private:
  Scalar punishment_;
};

template <typename Scalar = double>
using ProtocolState = Eigen::Matrix<Scalar, 3, 1>;

/// Two-vector over the sub-basis {|a>, |b'>}.
template <typename Scalar = double>
using SubState = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar = double>
struct VerificationBasis {
  SubState<Scalar> phi_a;
  SubState<Scalar> phi_b;
};

template <typename Scalar = double>
struct OutcomeDistribution {
  Scalar p1;  // D1: particle found in box B, Bob wins the bet
  Scalar p2;  // D2: verification finds phi_a, Bob loses the bet
  Scalar p3;  // D3: verification finds phi_b, Bob wins R

  Eigen::Matrix<Scalar, 3, 1> vec() const { return {p1, p2, p3}; }
};

namespace detail {
template <typename Scalar>
Scalar clamped_sqrt(Scalar x) {
  using std::sqrt;
  return sqrt(x > Scalar(0) ? x : Scalar(0));
}
}  // namespace detail

template <typename Scalar>
ProtocolState<Scalar> prepare(const PreparationChoice<Scalar>& choice) {
  using std::sqrt;
  const Scalar eps = choice.epsilon();
  return {sqrt(Scalar(0.5) + eps), detail::clamped_sqrt(Scalar(0.5) - eps),
          Scalar(0)};
}

/// Coherently diverts a fraction eta of the box-B amplitude into |b'>.
/// Throws std::logic_error when the state was already split.
template <typename Scalar>
ProtocolState<Scalar> split(const ProtocolState<Scalar>& state,
                            const SplittingChoice<Scalar>& choice) {
  using std::sqrt;
  if (state(2) != Scalar(0))
    throw std::logic_error("split applied to a state that already has a |b'> component");
  const Scalar eta = choice.eta();
  return {state(0), sqrt(Scalar(1) - eta) * state(1), sqrt(eta) * state(1)};
}

/// Conditional state on {|a>, |b'>} given that D1 did not fire.
template <typename Scalar>
SubState<Scalar> collapse_after_no_click(const ProtocolState<Scalar>& state) {
  const SubState<Scalar> rest{state(0), state(2)};
  const Scalar norm = rest.norm();
  if (!(norm > Scalar(0)))
    throw std::domain_error("post-selection on a no-click event of probability zero");
  return rest / norm;
}

template <typename Scalar>
VerificationBasis<Scalar> verification_basis(const SplittingChoice<Scalar>& choice) {
  using std::sqrt;
  const Scalar eta = choice.eta();
  const Scalar root = sqrt(eta);
  const Scalar scale = Scalar(1) / sqrt(Scalar(1) + eta);
  return {SubState<Scalar>{Scalar(1), root} * scale,
          SubState<Scalar>{root, Scalar(-1)} * scale};
}

/// Closed-form detector probabilities. Each of the three is evaluated
/// independently; their sum is not forced to one.
template <typename Scalar>
OutcomeDistribution<Scalar> outcome_distribution(const PreparationChoice<Scalar>& prep,
                                                 const SplittingChoice<Scalar>& splitting) {
  using std::sqrt;
  const Scalar eps = prep.epsilon();
  const Scalar eta = splitting.eta();
  const Scalar in_a = sqrt(Scalar(0.5) + eps);
  const Scalar in_b = detail::clamped_sqrt(Scalar(0.5) - eps);
  const Scalar diff = in_a - in_b;
  const Scalar sum = in_a + eta * in_b;
  return {(Scalar(0.5) - eps) * (Scalar(1) - eta),
          sum * sum / (Scalar(1) + eta),
          eta * diff * diff / (Scalar(1) + eta)};
}

template <typename Scalar>
Scalar expected_gain(const OutcomeDistribution<Scalar>& dist, const GameConfig<Scalar>& config) {
  const Scalar bet = GameConfig<Scalar>::bet();
  return dist.p1 * bet + dist.p3 * config.punishment() - dist.p2 * bet;
}

/// Bob's expected gain per round in coins. Alice's is the negation.
template <typename Scalar>
Scalar expected_gain(const PreparationChoice<Scalar>& prep, const SplittingChoice<Scalar>& splitting,
                     const GameConfig<Scalar>& config) {
  return expected_gain(outcome_distribution(prep, splitting), config);
}

template <typename Scalar>
Scalar alice_expected_gain(const PreparationChoice<Scalar>& prep,
                           const SplittingChoice<Scalar>& splitting,
                           const GameConfig<Scalar>& config) {
  return -expected_gain(prep, splitting, config);
}

// Convenience overloads on raw doubles; these validate via the choice types.
inline OutcomeDistribution<double> outcome_distribution(double epsilon, double eta) {
  return outcome_distribution(PreparationChoice<double>(epsilon), SplittingChoice<double>(eta));
}

inline double expected_gain(double epsilon, double eta, double punishment) {
  return expected_gain(PreparationChoice<double>(epsilon), SplittingChoice<double>(eta),
                       GameConfig<double>(punishment));
}

}  // namespace qgamble
