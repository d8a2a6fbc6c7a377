#include "qgamble/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace qgamble {

namespace {

constexpr std::string_view kSweepDistHeader = "epsilon,eta,p1,p2,p3";
constexpr std::string_view kSweepGainHeader = "epsilon,eta,p1,p2,p3,gain";
constexpr std::string_view kLedgerMagic = "# qgamble-ledger v1";
constexpr std::string_view kLedgerHeader = "index,epsilon,eta,detector,payoff,bankroll";

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error("malformed integer '" + std::string(text) + "'");
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string format_exact(double value) { return fmt::format("{}", value); }

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error("malformed number '" + std::string(text) + "'");
  return value;
}

std::string format_distribution(const OutcomeDistribution<double>& dist) {
  return fmt::format("p1={:.6f} p2={:.6f} p3={:.6f}", dist.p1, dist.p2, dist.p3);
}

void write_sweep(std::ostream& out, const SweepTable<double>& table) {
  const bool gain = table.has_gain();
  out << (gain ? kSweepGainHeader : kSweepDistHeader) << '\n';
  for (std::size_t i = 0; i < table.epsilon.size(); ++i) {
    for (std::size_t j = 0; j < table.eta.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      out << format_exact(table.epsilon[i]) << ',' << format_exact(table.eta[j]) << ','
          << format_exact(table.p1(r, c)) << ',' << format_exact(table.p2(r, c)) << ','
          << format_exact(table.p3(r, c));
      if (gain) out << ',' << format_exact(table.gain(r, c));
      out << '\n';
    }
  }
}

SweepTable<double> read_sweep(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("sweep file is empty");
  const auto header = strip_cr(line);
  bool gain = false;
  if (header == kSweepGainHeader)
    gain = true;
  else if (header != kSweepDistHeader)
    throw std::runtime_error("unrecognized sweep header '" + std::string(header) + "'");
  const std::size_t width = gain ? 6 : 5;

  std::vector<std::array<double, 6>> rows;
  while (std::getline(in, line)) {
    const auto view = strip_cr(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() != width)
      throw std::runtime_error("sweep row has " + std::to_string(fields.size()) + " fields");
    std::array<double, 6> row{};
    for (std::size_t k = 0; k < width; ++k) row[k] = parse_double(fields[k]);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("sweep file has no data rows");

  std::size_t cols = 0;
  while (cols < rows.size() && rows[cols][0] == rows[0][0]) ++cols;
  if (rows.size() % cols != 0) throw std::runtime_error("sweep rows do not form a grid");
  const std::size_t nrows = rows.size() / cols;

  SweepTable<double> table;
  table.p1.resize(nrows, cols);
  table.p2.resize(nrows, cols);
  table.p3.resize(nrows, cols);
  if (gain) table.gain.resize(nrows, cols);
  for (std::size_t j = 0; j < cols; ++j) table.eta.push_back(rows[j][1]);
  for (std::size_t i = 0; i < nrows; ++i) {
    table.epsilon.push_back(rows[i * cols][0]);
    for (std::size_t j = 0; j < cols; ++j) {
      const auto& row = rows[i * cols + j];
      if (row[0] != table.epsilon[i] || row[1] != table.eta[j])
        throw std::runtime_error("sweep rows are not in row-major grid order");
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      table.p1(r, c) = row[2];
      table.p2(r, c) = row[3];
      table.p3(r, c) = row[4];
      if (gain) table.gain(r, c) = row[5];
    }
  }
  return table;
}

void write_sweep_file(const std::filesystem::path& path, const SweepTable<double>& table) {
  auto out = open_for_write(path);
  write_sweep(out, table);
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_ledger(std::ostream& out, const SessionLedger& ledger) {
  out << kLedgerMagic << " R=" << format_exact(ledger.config().punishment())
      << " seed=" << ledger.seed() << " noise_e=" << format_exact(ledger.noise().error_rate())
      << '\n'
      << kLedgerHeader << '\n';
  const auto& bank = ledger.bankroll();
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const auto& r = ledger.rounds()[k];
    out << r.round_index << ',' << format_exact(r.epsilon_used) << ','
        << format_exact(r.eta_used) << ',' << to_string(r.detector) << ','
        << format_exact(r.payoff) << ',' << format_exact(bank[k]) << '\n';
  }
}

SessionLedger read_ledger(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line).substr(0, kLedgerMagic.size()) != kLedgerMagic)
    throw std::runtime_error("missing ledger preamble");
  double punishment = 0.0, noise_e = 0.0;
  std::uint64_t seed = 0;
  std::istringstream meta(std::string(strip_cr(line).substr(kLedgerMagic.size())));
  std::string token;
  while (meta >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed ledger preamble");
    const std::string_view key(token.data(), eq);
    const std::string_view value(token.data() + eq + 1, token.size() - eq - 1);
    if (key == "R")
      punishment = parse_double(value);
    else if (key == "seed")
      seed = parse_integer<std::uint64_t>(value);
    else if (key == "noise_e")
      noise_e = parse_double(value);
  }
  if (!std::getline(in, line) || strip_cr(line) != kLedgerHeader)
    throw std::runtime_error("missing ledger column header");

  SessionLedger ledger(GameConfig<double>(punishment), seed, NoiseModel<double>(noise_e));
  while (std::getline(in, line)) {
    const auto view = strip_cr(line);
    if (view.empty()) continue;
    const auto f = split_fields(view);
    if (f.size() != 6) throw std::runtime_error("ledger row must have 6 fields");
    ledger.append({parse_detector(f[3]), parse_double(f[4]), parse_integer<std::size_t>(f[0]),
                   parse_double(f[1]), parse_double(f[2])});
    if (ledger.bankroll().back() != parse_double(f[5]))
      throw std::runtime_error("ledger bankroll column disagrees with payoffs");
  }
  return ledger;
}

void write_ledger_file(const std::filesystem::path& path, const SessionLedger& ledger) {
  auto out = open_for_write(path);
  write_ledger(out, ledger);
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace qgamble
