// io.hpp
// Text formats: sweep tables (comma-delimited, header row, row-major over
// epsilon then eta) and session ledgers (one round per line). Files carry
// shortest round-trip decimal representations, so parsing a written file
// reproduces the in-memory values bit for bit.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qgamble/equilibrium.hpp"
#include "qgamble/game_engine.hpp"

namespace qgamble {

void write_sweep(std::ostream& out, const SweepTable<double>& table);
SweepTable<double> read_sweep(std::istream& in);

/// Throws std::runtime_error when the path cannot be written.
void write_sweep_file(const std::filesystem::path& path, const SweepTable<double>& table);

void write_ledger(std::ostream& out, const SessionLedger& ledger);
SessionLedger read_ledger(std::istream& in);
void write_ledger_file(const std::filesystem::path& path, const SessionLedger& ledger);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_exact(double value);
double parse_double(std::string_view text);

/// "p1=0.500000 p2=0.500000 p3=0.000000"
std::string format_distribution(const OutcomeDistribution<double>& dist);

}  // namespace qgamble
