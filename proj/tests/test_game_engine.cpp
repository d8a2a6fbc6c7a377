#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qgamble/game_engine.hpp"

using namespace qgamble;
using doctest::Approx;

namespace {

SessionLedger literal_ledger(std::initializer_list<Detector> detectors, double punishment) {
  const GameConfig<double> config(punishment);
  SessionLedger ledger(config, 0);
  std::size_t k = 0;
  for (Detector d : detectors) ledger.append({d, payoff_for(d, config), k++, 0.0, 0.0});
  return ledger;
}

// Exact tail sum, used to cross-check the library binomial.
double brute_upper_tail(std::size_t k, std::size_t n, double p) {
  double total = 0.0;
  for (std::size_t x = k; x <= n; ++x) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) +
                           x * std::log(p) + (n - x) * std::log1p(-p);
    total += std::exp(log_pmf);
  }
  return total;
}

}  // namespace

TEST_CASE("rng follows the documented algorithm") {
  Rng rng(0x123456789abcdefULL, 3);
  std::seed_seq seq{0x89abcdefu, 0x01234567u, 3u, 0u};
  std::mt19937_64 reference(seq);
  for (int i = 0; i < 5; ++i) CHECK(rng.next_u64() == reference());
  const auto raw = reference();
  CHECK(rng.uniform() == static_cast<double>(raw >> 11) * 0x1.0p-53);

  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(u == b.uniform());
  }
  Rng parent(7);
  Rng child = parent.split();
  CHECK(child.stream() == 1);
  CHECK(child.next_u64() != parent.next_u64());
}

TEST_CASE("play_round examples") {
  const GameConfig<double> r5(5.0);
  auto r = play_round(PreparationChoice<double>(0.0), SplittingChoice<double>(0.27), r5, 0.10);
  CHECK(r.detector == Detector::D1);
  CHECK(r.payoff == 1.0);

  r = play_round(PreparationChoice<double>(0.0), SplittingChoice<double>(0.27), r5, 0.99);
  CHECK(r.detector == Detector::D2);
  CHECK(r.payoff == -1.0);

  r = play_round(PreparationChoice<double>(0.5), SplittingChoice<double>(0.5), r5, 0.999);
  CHECK(r.detector == Detector::D3);
  CHECK(r.payoff == 5.0);
  CHECK(r.epsilon_used == 0.5);
  CHECK(r.eta_used == 0.5);

  // Honest play never reaches D3 even at the very top of [0, 1).
  r = play_round(PreparationChoice<double>(0.0), SplittingChoice<double>(0.27), r5, std::nextafter(1.0, 0.0));
  CHECK(r.detector == Detector::D2);

  CHECK_THROWS_AS(sample_detector({0.5, 0.5, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(sample_detector({0.5, 0.5, 0.0}, -0.1), DomainError);
}

TEST_CASE("payoff mapping") {
  const GameConfig<double> r7(7.0);
  CHECK(payoff_for(Detector::D1, r7) == 1.0);
  CHECK(payoff_for(Detector::D2, r7) == -1.0);
  CHECK(payoff_for(Detector::D3, r7) == 7.0);
  CHECK(parse_detector(to_string(Detector::D3)) == Detector::D3);
  CHECK_THROWS(parse_detector("D4"));
}

TEST_CASE("strategies") {
  CHECK(Strategy::fixed(Role::Alice, 0.2).parameter(99) == 0.2);
  CHECK_THROWS_AS(Strategy::fixed(Role::Alice, 0.7), DomainError);
  CHECK_NOTHROW(Strategy::fixed(Role::Bob, 0.7));
  CHECK(Strategy::equilibrium(Role::Alice, 5.0).parameter(0) == 0.0);
  const double eta = Strategy::equilibrium(Role::Bob, 5.0).parameter(3);
  CHECK(eta >= 0.26);
  CHECK(eta <= 0.28);

  const auto sched = Strategy::schedule(Role::Bob, {0.1, 0.2, 0.3});
  CHECK(sched.parameter(0) == 0.1);
  CHECK(sched.parameter(4) == 0.2);
  CHECK_THROWS(Strategy::schedule(Role::Bob, {}));
  CHECK_THROWS_AS(Strategy::schedule(Role::Bob, {0.1, 1.2}), DomainError);

  CHECK(Strategy::parse(Role::Alice, "fixed:0.25", 5.0).parameter(0) == 0.25);
  CHECK(Strategy::parse(Role::Bob, "0.4", 5.0).parameter(0) == 0.4);
  CHECK(Strategy::parse(Role::Bob, "schedule:0,0.5", 5.0).parameter(1) == 0.5);
  CHECK(Strategy::parse(Role::Bob, "equilibrium", 5.0).parameter(0) == eta);
  CHECK_THROWS(Strategy::parse(Role::Bob, "fixed:abc", 5.0));
}

TEST_CASE("summarize literal ledgers") {
  auto s = summarize(literal_ledger({Detector::D1, Detector::D2, Detector::D1, Detector::D3}, 5.0));
  CHECK(s.frequency[0] == 0.5);
  CHECK(s.frequency[1] == 0.25);
  CHECK(s.frequency[2] == 0.25);
  CHECK(s.mean_gain == 1.5);
  CHECK(s.final_bankroll == 6.0);
  CHECK(s.bankroll_min == 0.0);
  CHECK(s.bankroll_max == 6.0);
  // sample std of {1,-1,1,5}: sqrt(19/3)
  CHECK(s.standard_error == Approx(std::sqrt(19.0 / 3.0) / 2.0));

  s = summarize(literal_ledger({Detector::D2}, 5.0));
  CHECK(s.frequency[1] == 1.0);
  CHECK(s.mean_gain == -1.0);
  CHECK(s.standard_error == 0.0);

  CHECK_THROWS(summarize(SessionLedger(GameConfig<double>(5.0), 0)));
}

TEST_CASE("ledger rejects inconsistent rounds") {
  SessionLedger ledger(GameConfig<double>(5.0), 0);
  CHECK_THROWS_AS(ledger.append({Detector::D1, 1.0, 1, 0.0, 0.0}), std::logic_error);
  CHECK_THROWS_AS(ledger.append({Detector::D3, 1.0, 0, 0.0, 0.0}), std::logic_error);
}

TEST_CASE("sessions are deterministic and conserve the bankroll") {
  const GameConfig<double> r5(5.0);
  const auto alice = Strategy::schedule(Role::Alice, {0.0, 0.3, 0.5});
  const auto bob = Strategy::fixed(Role::Bob, 0.6);
  const auto a = run_session(alice, bob, r5, 5000, 99);
  const auto b = run_session(alice, bob, r5, 5000, 99);
  const auto c = run_session(alice, bob, r5, 5000, 100);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  double running = 0.0;
  std::array<std::size_t, 3> counts{};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& r = a.rounds()[k];
    running += r.payoff;
    ++counts[static_cast<int>(r.detector)];
    REQUIRE(a.bankroll()[k] == running);
    REQUIRE(r.payoff == payoff_for(r.detector, r5));
    REQUIRE(r.epsilon_used == alice.parameter(k));
  }
  CHECK(counts[0] + counts[1] + counts[2] == a.size());
  CHECK(a.bob_bankroll() + a.alice_bankroll() == 0.0);

  CHECK_THROWS(run_session(bob, alice, r5, 10, 1));
  CHECK_THROWS(run_session(alice, bob, r5, 0, 1));
}

TEST_CASE("honest session frequencies converge") {
  const GameConfig<double> r5(5.0);
  const std::size_t n = 100000;
  const auto fair = run_session(Strategy::fixed(Role::Alice, 0.0), Strategy::fixed(Role::Bob, 0.0), r5, n, 2024);
  const auto s = summarize(fair);
  CHECK(std::abs(s.frequency[0] - 0.5) <= 3.0 * std::sqrt(0.25 / n));
  CHECK(s.counts[2] == 0);

  const auto split = run_session(Strategy::fixed(Role::Alice, 0.0), Strategy::fixed(Role::Bob, 0.27), r5, n, 2024);
  const auto t = summarize(split);
  const double sigma = std::sqrt(1.0 - 0.27 * 0.27);  // payoffs are +-1 with mean -0.27
  CHECK(std::abs(t.mean_gain + 0.27) <= 3.0 * sigma / std::sqrt(double(n)));
  CHECK(std::abs(t.frequency[0] - 0.365) <= 3.0 * std::sqrt(0.365 * 0.635 / n));
}

TEST_CASE("noisy sessions sample the optical distribution") {
  const GameConfig<double> r5(5.0);
  const NoiseModel<double> noise(0.5);
  const std::size_t n = 100000;
  const auto ledger =
      run_session(Strategy::fixed(Role::Alice, 0.0), Strategy::fixed(Role::Bob, 0.4), r5, n, 5, noise);
  const double p3 = honest_d3_rate(SplittingChoice<double>(0.4), noise);
  CHECK(p3 == Approx(0.5 * 0.4 / 1.4).epsilon(1e-12));
  const auto s = summarize(ledger);
  CHECK(std::abs(s.frequency[2] - p3) <= 3.0 * std::sqrt(p3 * (1 - p3) / n));
}

TEST_CASE("binomial upper tail") {
  CHECK(binomial_upper_tail(0, 10, 0.3) == 1.0);
  CHECK(binomial_upper_tail(11, 10, 0.3) == 0.0);
  CHECK(binomial_upper_tail(1, 10, 0.0) == 0.0);
  for (std::size_t k : {1u, 3u, 7u, 10u})
    CHECK(binomial_upper_tail(k, 10, 0.3) == Approx(brute_upper_tail(k, 10, 0.3)).epsilon(1e-12));
  CHECK(binomial_upper_tail(80, 10000, 0.005315) ==
        Approx(brute_upper_tail(80, 10000, 0.005315)).epsilon(1e-9));
}

TEST_CASE("detect_cheating without noise") {
  const NoiseModel<double> clean;
  SessionLedger ledger(GameConfig<double>(5.0), 0);
  for (std::size_t k = 0; k < 100; ++k) {
    const Detector d = k == 42 ? Detector::D3 : Detector::D2;
    ledger.append({d, payoff_for(d, ledger.config()), k, 0.1, 0.27});
  }
  auto t = detect_cheating(ledger, 0.27, clean);
  CHECK(t.flagged);
  CHECK(t.p_value == 0.0);
  CHECK(t.d3_count == 1);
  CHECK(t.expected_noise_rate == 0.0);

  const auto honest = run_session(Strategy::fixed(Role::Alice, 0.0), Strategy::fixed(Role::Bob, 0.27),
                                  GameConfig<double>(5.0), 20000, 3);
  t = detect_cheating(honest, 0.27, clean);
  CHECK_FALSE(t.flagged);
  CHECK(t.p_value == 1.0);

  CHECK_THROWS(detect_cheating(honest, 0.3, clean));
  CHECK_THROWS_AS(detect_cheating(honest, 0.27, clean, 1.5), DomainError);
}

TEST_CASE("detect_cheating with noise: power and false alarms") {
  const GameConfig<double> r5(5.0);
  const NoiseModel<double> noise(0.025);
  const auto bob = Strategy::fixed(Role::Bob, 0.27);
  int flagged_cheat = 0, flagged_honest = 0;
  const int reps = 40;
  for (int rep = 0; rep < reps; ++rep) {
    const auto cheat = run_session(Strategy::fixed(Role::Alice, 0.2), bob, r5, 10000, 1000 + rep, noise);
    const auto honest = run_session(Strategy::fixed(Role::Alice, 0.0), bob, r5, 10000, 5000 + rep, noise);
    flagged_cheat += detect_cheating(cheat, 0.27, noise).flagged;
    flagged_honest += detect_cheating(honest, 0.27, noise).flagged;
  }
  CHECK(flagged_cheat == reps);
  CHECK(flagged_honest <= 3);
}
