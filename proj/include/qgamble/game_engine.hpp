// game_engine.hpp
// Seeded Monte Carlo gambling sessions and statistical cheat detection.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qgamble/optics.hpp"
#include "qgamble/protocol.hpp"
#include "qgamble/rng.hpp"

namespace qgamble {

enum class Role { Alice, Bob };
enum class Detector { D1 = 0, D2 = 1, D3 = 2 };

std::string_view to_string(Role role);
std::string_view to_string(Detector detector);
Detector parse_detector(std::string_view text);

/// A player's policy for choosing epsilon (Alice) or eta (Bob) each round.
class Strategy {
 public:
  struct Fixed {
    double value;
  };
  struct Equilibrium {
    double punishment;
  };
  struct Schedule {
    std::vector<double> values;  // cycled when shorter than the session
  };
  using Policy = std::variant<Fixed, Equilibrium, Schedule>;

  static Strategy fixed(Role role, double value);
  /// Alice's maximin play is the honest state; Bob's is eta~(R).
  static Strategy equilibrium(Role role, double punishment);
  static Strategy schedule(Role role, std::vector<double> values);

  Role role() const { return role_; }
  const Policy& policy() const { return policy_; }

  double parameter(std::size_t round_index) const;

  /// Parses "equilibrium", "fixed:<v>", "schedule:<v>,<v>,..." or a bare number.
  static Strategy parse(Role role, std::string_view text, double punishment);

 private:
  Strategy(Role role, Policy policy, double resolved);

  Role role_;
  Policy policy_;
  double resolved_;  // the parameter for Fixed/Equilibrium policies
};

struct RoundOutcome {
  Detector detector;
  double payoff;  // Bob's payoff in coins
  std::size_t round_index;
  double epsilon_used;
  double eta_used;
};

double payoff_for(Detector detector, const GameConfig<double>& config);

/// Distribution actually sampled by the machine. Noise-free rounds use the
/// closed form directly; otherwise the optical model with dephasing.
OutcomeDistribution<double> round_distribution(const PreparationChoice<double>& prep,
                                               const SplittingChoice<double>& splitting,
                                               const NoiseModel<double>& noise = {});

/// Inverse-CDF sampling with cumulative order (D1, D2, D3).
Detector sample_detector(const OutcomeDistribution<double>& dist, double draw);

RoundOutcome play_round(const PreparationChoice<double>& prep,
                        const SplittingChoice<double>& splitting,
                        const GameConfig<double>& config, double draw,
                        const NoiseModel<double>& noise = {});

class SessionLedger {
 public:
  SessionLedger(GameConfig<double> config, std::uint64_t seed, NoiseModel<double> noise = {});

  /// Appends a round; its index must equal the current length.
  void append(const RoundOutcome& round);

  const GameConfig<double>& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const NoiseModel<double>& noise() const { return noise_; }
  const std::vector<RoundOutcome>& rounds() const { return rounds_; }
  /// Bob's running total after each round. Alice holds the negation.
  const std::vector<double>& bankroll() const { return bankroll_; }
  double bob_bankroll() const { return bankroll_.empty() ? 0.0 : bankroll_.back(); }
  double alice_bankroll() const { return -bob_bankroll(); }
  std::size_t size() const { return rounds_.size(); }
  bool empty() const { return rounds_.empty(); }

  friend bool operator==(const SessionLedger& lhs, const SessionLedger& rhs);

 private:
  GameConfig<double> config_;
  std::uint64_t seed_;
  NoiseModel<double> noise_;
  std::vector<RoundOutcome> rounds_;
  std::vector<double> bankroll_;
};

bool operator==(const RoundOutcome& lhs, const RoundOutcome& rhs);

SessionLedger run_session(const Strategy& alice, const Strategy& bob,
                          const GameConfig<double>& config, std::size_t n_rounds,
                          std::uint64_t seed, const NoiseModel<double>& noise = {});

struct SessionSummary {
  std::size_t rounds;
  std::array<std::size_t, 3> counts;
  std::array<double, 3> frequency;
  double mean_gain;
  double standard_error;  // sample standard deviation / sqrt(n)
  double bankroll_min;
  double bankroll_max;
  double final_bankroll;
};

SessionSummary summarize(const SessionLedger& ledger);

struct CheatTestResult {
  std::size_t d3_count;
  std::size_t rounds_observed;
  double expected_noise_rate;
  double p_value;
  double significance;
  bool flagged;
};

constexpr double kDefaultSignificance = 0.01;

/// D3 probability an honest Alice produces at splitting eta under `noise`.
double honest_d3_rate(const SplittingChoice<double>& splitting, const NoiseModel<double>& noise);

/// One-sided binomial test of the D3 count against the honest-play noise
/// floor. Every round must have used `eta_used`.
CheatTestResult detect_cheating(const SessionLedger& ledger, double eta_used,
                                const NoiseModel<double>& noise,
                                double significance = kDefaultSignificance);

/// Upper tail P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(std::size_t k, std::size_t n, double p);

}  // namespace qgamble
