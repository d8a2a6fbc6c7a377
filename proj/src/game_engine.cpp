#include "qgamble/game_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

#include "qgamble/equilibrium.hpp"

namespace qgamble {

std::string_view to_string(Role role) { return role == Role::Alice ? "alice" : "bob"; }

std::string_view to_string(Detector detector) {
  switch (detector) {
    case Detector::D1: return "D1";
    case Detector::D2: return "D2";
    case Detector::D3: return "D3";
  }
  throw std::logic_error("unknown detector");
}

Detector parse_detector(std::string_view text) {
  if (text == "D1") return Detector::D1;
  if (text == "D2") return Detector::D2;
  if (text == "D3") return Detector::D3;
  throw std::invalid_argument("unknown detector '" + std::string(text) + "'");
}

namespace {
double validated(Role role, double value) {
  if (role == Role::Alice)
    return PreparationChoice<double>(value).epsilon();
  return SplittingChoice<double>(value).eta();
}
}  // namespace

Strategy::Strategy(Role role, Policy policy, double resolved)
    : role_(role), policy_(std::move(policy)), resolved_(resolved) {}

Strategy Strategy::fixed(Role role, double value) {
  return Strategy(role, Fixed{value}, validated(role, value));
}

Strategy Strategy::equilibrium(Role role, double punishment) {
  const GameConfig<double> config(punishment);
  const double value = role == Role::Alice ? 0.0 : bob_optimal_eta(config).eta_tilde;
  return Strategy(role, Equilibrium{punishment}, value);
}

Strategy Strategy::schedule(Role role, std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("strategy schedule must not be empty");
  for (double v : values) validated(role, v);
  return Strategy(role, Schedule{std::move(values)}, 0.0);
}

Strategy Strategy::parse(Role role, std::string_view text, double punishment) {
  auto number = [](std::string_view t) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
      throw std::invalid_argument("malformed strategy value '" + std::string(t) + "'");
    return v;
  };
  if (text == "equilibrium") return equilibrium(role, punishment);
  if (text.starts_with("fixed:")) return fixed(role, number(text.substr(6)));
  if (text.starts_with("schedule:")) {
    std::vector<double> values;
    auto rest = text.substr(9);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(number(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return schedule(role, std::move(values));
  }
  return fixed(role, number(text));
}

double Strategy::parameter(std::size_t round_index) const {
  if (const auto* s = std::get_if<Schedule>(&policy_))
    return s->values[round_index % s->values.size()];
  return resolved_;
}

double payoff_for(Detector detector, const GameConfig<double>& config) {
  switch (detector) {
    case Detector::D1: return GameConfig<double>::bet();
    case Detector::D2: return -GameConfig<double>::bet();
    case Detector::D3: return config.punishment();
  }
  throw std::logic_error("unknown detector");
}

OutcomeDistribution<double> round_distribution(const PreparationChoice<double>& prep,
                                               const SplittingChoice<double>& splitting,
                                               const NoiseModel<double>& noise) {
  if (noise.error_rate() == 0.0) return outcome_distribution(prep, splitting);
  const auto d = run_circuit(angles_for(prep, splitting), noise);
  return {d.d1, d.d2, d.d3};
}

Detector sample_detector(const OutcomeDistribution<double>& dist, double draw) {
  if (!(draw >= 0.0 && draw < 1.0)) throw DomainError("draw", "uniform draw must lie in [0, 1)");
  if (draw < dist.p1) return Detector::D1;
  if (draw < dist.p1 + dist.p2 || dist.p3 <= 0.0) return Detector::D2;
  return Detector::D3;
}

RoundOutcome play_round(const PreparationChoice<double>& prep,
                        const SplittingChoice<double>& splitting,
                        const GameConfig<double>& config, double draw,
                        const NoiseModel<double>& noise) {
  const Detector detector = sample_detector(round_distribution(prep, splitting, noise), draw);
  return {detector, payoff_for(detector, config), 0, prep.epsilon(), splitting.eta()};
}

SessionLedger::SessionLedger(GameConfig<double> config, std::uint64_t seed,
                             NoiseModel<double> noise)
    : config_(config), seed_(seed), noise_(noise) {}

void SessionLedger::append(const RoundOutcome& round) {
  if (round.round_index != rounds_.size())
    throw std::logic_error("ledger rounds must be appended in order");
  if (round.payoff != payoff_for(round.detector, config_))
    throw std::logic_error("round payoff does not match its detector");
  rounds_.push_back(round);
  bankroll_.push_back(bob_bankroll() + round.payoff);
}

bool operator==(const RoundOutcome& lhs, const RoundOutcome& rhs) {
  return lhs.detector == rhs.detector && lhs.payoff == rhs.payoff &&
         lhs.round_index == rhs.round_index && lhs.epsilon_used == rhs.epsilon_used &&
         lhs.eta_used == rhs.eta_used;
}

bool operator==(const SessionLedger& lhs, const SessionLedger& rhs) {
  return lhs.config_.punishment() == rhs.config_.punishment() && lhs.seed_ == rhs.seed_ &&
         lhs.noise_.error_rate() == rhs.noise_.error_rate() && lhs.rounds_ == rhs.rounds_ &&
         lhs.bankroll_ == rhs.bankroll_;
}

SessionLedger run_session(const Strategy& alice, const Strategy& bob,
                          const GameConfig<double>& config, std::size_t n_rounds,
                          std::uint64_t seed, const NoiseModel<double>& noise) {
  if (alice.role() != Role::Alice || bob.role() != Role::Bob)
    throw std::invalid_argument("run_session expects an Alice strategy and a Bob strategy");
  if (n_rounds < 1) throw DomainError("rounds", "a session needs at least one round");

  SessionLedger ledger(config, seed, noise);
  Rng rng(seed);
  std::optional<std::pair<double, double>> cached_params;
  OutcomeDistribution<double> dist{};
  for (std::size_t k = 0; k < n_rounds; ++k) {
    const PreparationChoice<double> prep(alice.parameter(k));
    const SplittingChoice<double> splitting(bob.parameter(k));
    const std::pair<double, double> params{prep.epsilon(), splitting.eta()};
    if (cached_params != params) {
      dist = round_distribution(prep, splitting, noise);
      cached_params = params;
    }
    const Detector detector = sample_detector(dist, rng.uniform());
    ledger.append({detector, payoff_for(detector, config), k, params.first, params.second});
  }
  return ledger;
}

SessionSummary summarize(const SessionLedger& ledger) {
  if (ledger.empty()) throw std::invalid_argument("cannot summarize an empty ledger");
  SessionSummary s{};
  s.rounds = ledger.size();
  double sum = 0.0;
  for (const auto& r : ledger.rounds()) {
    ++s.counts[static_cast<int>(r.detector)];
    sum += r.payoff;
  }
  const double n = static_cast<double>(s.rounds);
  for (int i = 0; i < 3; ++i) s.frequency[i] = static_cast<double>(s.counts[i]) / n;
  s.mean_gain = sum / n;
  double sq = 0.0;
  for (const auto& r : ledger.rounds()) sq += (r.payoff - s.mean_gain) * (r.payoff - s.mean_gain);
  s.standard_error = s.rounds > 1 ? std::sqrt(sq / (n - 1.0)) / std::sqrt(n) : 0.0;
  const auto& bank = ledger.bankroll();
  const auto [lo, hi] = std::minmax_element(bank.begin(), bank.end());
  s.bankroll_min = *lo;
  s.bankroll_max = *hi;
  s.final_bankroll = bank.back();
  return s;
}

double honest_d3_rate(const SplittingChoice<double>& splitting, const NoiseModel<double>& noise) {
  return round_distribution(PreparationChoice<double>(0.0), splitting, noise).p3;
}

double binomial_upper_tail(std::size_t k, std::size_t n, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
}

CheatTestResult detect_cheating(const SessionLedger& ledger, double eta_used,
                                const NoiseModel<double>& noise, double significance) {
  if (!(significance > 0.0 && significance < 1.0))
    throw DomainError("significance", "significance must lie in (0, 1)");
  const SplittingChoice<double> splitting(eta_used);
  std::size_t d3 = 0;
  for (const auto& r : ledger.rounds()) {
    if (r.eta_used != eta_used)
      throw std::invalid_argument("cheat test requires every round to use the same eta");
    if (r.detector == Detector::D3) ++d3;
  }
  CheatTestResult result{};
  result.d3_count = d3;
  result.rounds_observed = ledger.size();
  result.expected_noise_rate = honest_d3_rate(splitting, noise);
  result.p_value = binomial_upper_tail(d3, ledger.size(), result.expected_noise_rate);
  result.significance = significance;
  result.flagged = result.p_value < significance;
  return result;
}

}  // namespace qgamble
