#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "qgamble/io.hpp"

using namespace qgamble;

TEST_CASE("format_exact round-trips arbitrary doubles") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = dist(gen) * std::pow(10.0, static_cast<int>(gen() % 20) - 10);
    REQUIRE(parse_double(format_exact(v)) == v);
  }
  CHECK(format_exact(0.5) == "0.5");
  CHECK_THROWS(parse_double("1.0x"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("format_distribution uses six decimals") {
  CHECK(format_distribution(outcome_distribution(0.0, 0.0)) == "p1=0.500000 p2=0.500000 p3=0.000000");
  CHECK(format_distribution(outcome_distribution(0.5, 0.5)) == "p1=0.000000 p2=0.666667 p3=0.333333");
}

TEST_CASE("sweep files round-trip bit-exactly") {
  for (bool gain : {false, true}) {
    const auto table = gain ? sweep_gain(5.0, 17) : sweep_distribution(23);
    std::stringstream buffer;
    write_sweep(buffer, table);
    const std::string text = buffer.str();
    const auto parsed = read_sweep(buffer);
    CHECK(parsed.epsilon == table.epsilon);
    CHECK(parsed.eta == table.eta);
    CHECK((parsed.p1 == table.p1).all());
    CHECK((parsed.p2 == table.p2).all());
    CHECK((parsed.p3 == table.p3).all());
    CHECK(parsed.has_gain() == gain);
    if (gain) CHECK((parsed.gain == table.gain).all());

    std::stringstream again;
    write_sweep(again, parsed);
    CHECK(again.str() == text);
  }
}

TEST_CASE("sweep header and row layout") {
  std::stringstream buffer;
  write_sweep(buffer, sweep_gain(5.0, 2));
  std::string header, first, second;
  std::getline(buffer, header);
  std::getline(buffer, first);
  std::getline(buffer, second);
  CHECK(header == "epsilon,eta,p1,p2,p3,gain");
  CHECK(first.rfind("0,0,", 0) == 0);
  CHECK(second.rfind("0,1,", 0) == 0);  // eta varies fastest
}

TEST_CASE("malformed sweep input") {
  std::stringstream bad_header("eps,eta\n0,0\n");
  CHECK_THROWS(read_sweep(bad_header));
  std::stringstream bad_row("epsilon,eta,p1,p2,p3\n0,0,1,2\n");
  CHECK_THROWS(read_sweep(bad_row));
  std::stringstream empty("");
  CHECK_THROWS(read_sweep(empty));
}

TEST_CASE("unwritable sweep path") {
  CHECK_THROWS_AS(write_sweep_file("/nonexistent-dir/qgamble/out.csv", sweep_distribution(3)), std::runtime_error);
}

TEST_CASE("ledger files round-trip") {
  const auto ledger = run_session(Strategy::schedule(Role::Alice, {0.0, 0.45}), Strategy::fixed(Role::Bob, 0.27),
                                  GameConfig<double>(5.5), 500, 77, NoiseModel<double>(0.1));
  std::stringstream buffer;
  write_ledger(buffer, ledger);
  const auto parsed = read_ledger(buffer);
  CHECK(parsed == ledger);

  std::stringstream check;
  write_ledger(check, ledger);
  std::string magic, header, row;
  std::getline(check, magic);
  std::getline(check, header);
  std::getline(check, row);
  CHECK(magic == "# qgamble-ledger v1 R=5.5 seed=77 noise_e=0.1");
  CHECK(header == "index,epsilon,eta,detector,payoff,bankroll");
  CHECK(row.rfind("0,0,0.27,D", 0) == 0);
}

TEST_CASE("ledger reader rejects inconsistent bankroll") {
  std::stringstream tampered(
      "# qgamble-ledger v1 R=5 seed=1 noise_e=0\n"
      "index,epsilon,eta,detector,payoff,bankroll\n"
      "0,0,0.27,D1,1,1\n"
      "1,0,0.27,D2,-1,3\n");
  CHECK_THROWS(read_ledger(tampered));
}
