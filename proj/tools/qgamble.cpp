// qgamble: command-line front end for the quantum gambling engine.
//
//   qgamble dist --epsilon 0 --eta 0.27
//   qgamble sweep gain --R 5 --grid 101 --out gain.csv
//   qgamble equilibrium --R 5
//   qgamble circuit --epsilon 0 --eta 0.27 --noise 0.025
//   qgamble simulate --alice fixed:0 --bob equilibrium --R 5 --rounds 100000 --seed 42
//   qgamble serve --port 8080

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

// Eigen must precede httplib, whose system headers collide with Eigen's product kernels.
#include "qgamble/equilibrium.hpp"
#include "qgamble/game_engine.hpp"
#include "qgamble/io.hpp"
#include "qgamble/optics.hpp"
#include "qgamble/service.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

namespace {

using namespace qgamble;

constexpr double kDegree = std::numbers::pi / 180.0;

int cmd_dist(double epsilon, double eta) {
  std::cout << format_distribution(outcome_distribution(epsilon, eta)) << '\n';
  return 0;
}

int cmd_sweep(const std::string& kind, int grid, double punishment, const std::string& out) {
  const auto table = kind == "gain" ? sweep_gain(punishment, grid) : sweep_distribution(grid);
  if (out.empty() || out == "-") {
    write_sweep(std::cout, table);
  } else {
    write_sweep_file(out, table);
    std::cerr << fmt::format("wrote {} rows to {}\n", table.epsilon.size() * table.eta.size(), out);
  }
  return 0;
}

int cmd_equilibrium(double punishment, double tol) {
  const GameConfig<double> config(punishment);
  const auto eq = bob_optimal_eta(config, tol);
  std::cout << fmt::format("R={:.6f}\n", punishment)
            << fmt::format("eta_tilde={:.6f}\n", eq.eta_tilde)
            << fmt::format("guaranteed_gain={:.6f}\n", eq.guaranteed_gain)
            << fmt::format("alice_best_epsilon={:.6f}\n", eq.alice_best_epsilon)
            << fmt::format("tolerance={:g}\n", eq.tolerance);
  return 0;
}

int cmd_circuit(std::optional<double> epsilon, std::optional<double> eta,
                std::optional<double> theta_a, std::optional<double> theta_b1,
                std::optional<double> theta_b2, double noise_e) {
  const NoiseModel<double> noise(noise_e);
  std::optional<CircuitSettings<double>> settings;
  if (theta_a || theta_b1 || theta_b2) {
    if (!(theta_a && theta_b1 && theta_b2))
      throw std::invalid_argument("--theta-a, --theta-b1 and --theta-b2 must be given together");
    settings.emplace(*theta_a * kDegree, *theta_b1 * kDegree, *theta_b2 * kDegree);
  } else {
    if (!epsilon || !eta)
      throw std::invalid_argument("give --epsilon and --eta, or all three --theta-* angles");
    settings.emplace(angles_for(*epsilon, *eta));
  }
  const auto d = run_circuit(*settings, noise);
  std::cout << fmt::format("theta_a={:.6f}deg theta_b1={:.6f}deg theta_b2={:.6f}deg\n",
                           settings->theta_a() / kDegree, settings->theta_b1() / kDegree,
                           settings->theta_b2() / kDegree)
            << format_distribution({d.d1, d.d2, d.d3}) << '\n'
            << fmt::format("noise_e={:.6f} threshold_R5={:.6f}\n", noise_e,
                           error_threshold(GameConfig<double>(5.0)));
  if (const auto r = max_punishment(noise))
    std::cout << fmt::format("max_punishment={:.6f}\n", *r);
  else
    std::cout << "max_punishment=unbounded\n";
  return 0;
}

int cmd_simulate(const std::string& alice_spec, const std::string& bob_spec, double punishment,
                 std::size_t rounds, std::uint64_t seed, double noise_e, double significance,
                 const std::string& out) {
  const GameConfig<double> config(punishment);
  const NoiseModel<double> noise(noise_e);
  const auto alice = Strategy::parse(Role::Alice, alice_spec, punishment);
  const auto bob = Strategy::parse(Role::Bob, bob_spec, punishment);
  const auto ledger = run_session(alice, bob, config, rounds, seed, noise);
  if (!out.empty()) write_ledger_file(out, ledger);

  const auto s = summarize(ledger);
  std::cout << fmt::format("rounds={} seed={} R={:.6f} noise_e={:.6f}\n", s.rounds, seed, punishment,
                           noise_e)
            << fmt::format("p1={:.6f} p2={:.6f} p3={:.6f}\n", s.frequency[0], s.frequency[1],
                           s.frequency[2])
            << fmt::format("mean_gain={:.6f} standard_error={:.6f}\n", s.mean_gain, s.standard_error)
            << fmt::format("bankroll_final={:.6f} bankroll_min={:.6f} bankroll_max={:.6f}\n",
                           s.final_bankroll, s.bankroll_min, s.bankroll_max);
  const double eta0 = ledger.rounds().front().eta_used;
  const bool constant_eta = std::all_of(ledger.rounds().begin(), ledger.rounds().end(),
                                        [&](const RoundOutcome& r) { return r.eta_used == eta0; });
  if (constant_eta) {
    const auto t = detect_cheating(ledger, eta0, noise, significance);
    std::cout << fmt::format("cheat_test d3={} expected_rate={:.6f} p_value={:.6g} flagged={}\n",
                             t.d3_count, t.expected_noise_rate, t.p_value, t.flagged);
  } else {
    std::cout << "cheat_test unavailable (eta varied across rounds)\n";
  }
  return 0;
}

int cmd_serve(const std::string& host, int port) {
  SessionService service;
  httplib::Server server;
  mount(server, service);
  std::cerr << fmt::format("listening on http://{}:{}\n", host, port);
  if (!server.listen(host, port)) {
    std::cerr << fmt::format("error: could not bind {}:{}\n", host, port);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum gambling machine: analysis, optics simulation and game sessions"};
  app.require_subcommand(1);

  double epsilon = 0.0, eta = 0.0;
  auto* dist = app.add_subcommand("dist", "Detector probabilities for (epsilon, eta)");
  dist->add_option("--epsilon", epsilon, "Alice's preparation bias")->required();
  dist->add_option("--eta", eta, "Bob's splitting fraction")->required();

  std::string kind = "dist", out;
  int grid = 101;
  double punishment = 5.0;
  auto* sweep = app.add_subcommand("sweep", "Tabulate the distribution or Bob's gain over a grid");
  sweep->add_option("kind", kind, "dist or gain")->check(CLI::IsMember({"dist", "gain"}));
  sweep->add_option("--grid", grid, "points per axis")->check(CLI::Range(2, 100001));
  sweep->add_option("--R", punishment, "punishment R");
  sweep->add_option("--out,-o", out, "output file (default stdout)");

  double tol = 1e-4;
  auto* equilibrium = app.add_subcommand("equilibrium", "Bob's maximin splitting parameter");
  equilibrium->add_option("--R", punishment, "punishment R")->required();
  equilibrium->add_option("--tol", tol, "tolerance on eta");

  std::optional<double> c_eps, c_eta, theta_a, theta_b1, theta_b2;
  double noise_e = 0.0;
  auto* circuit = app.add_subcommand("circuit", "Simulate the optical machine");
  circuit->add_option("--epsilon", c_eps);
  circuit->add_option("--eta", c_eta);
  circuit->add_option("--theta-a", theta_a, "HWP a angle in degrees");
  circuit->add_option("--theta-b1", theta_b1, "HWP b1 angle in degrees");
  circuit->add_option("--theta-b2", theta_b2, "HWP b2 angle in degrees");
  circuit->add_option("--noise,-e", noise_e, "dephasing error rate");

  std::string alice_spec = "fixed:0", bob_spec = "equilibrium";
  std::size_t rounds = 1000;
  std::uint64_t seed = 1;
  double significance = kDefaultSignificance;
  auto* simulate = app.add_subcommand("simulate", "Run a seeded gambling session");
  simulate->add_option("--alice", alice_spec, "equilibrium | fixed:<eps> | schedule:<eps>,...");
  simulate->add_option("--bob", bob_spec, "equilibrium | fixed:<eta> | schedule:<eta>,...");
  simulate->add_option("--R", punishment, "punishment R");
  simulate->add_option("--rounds,-n", rounds)->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed);
  simulate->add_option("--noise,-e", noise_e, "dephasing error rate");
  simulate->add_option("--significance", significance);
  simulate->add_option("--out,-o", out, "ledger output file");

  std::string host = "127.0.0.1";
  int port = default_port();
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service (port from QGAMBLE_PORT)");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dist) return cmd_dist(epsilon, eta);
    if (*sweep) return cmd_sweep(kind, grid, punishment, out);
    if (*equilibrium) return cmd_equilibrium(punishment, tol);
    if (*circuit) return cmd_circuit(c_eps, c_eta, theta_a, theta_b1, theta_b2, noise_e);
    if (*simulate)
      return cmd_simulate(alice_spec, bob_spec, punishment, rounds, seed, noise_e, significance, out);
    if (*serve) return cmd_serve(host, port);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.field() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
