#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcbd::plots {

/// Comma-separated table with a header row. No quoting; the CSVs written by
/// the experiments never need it.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws ParseError(1, ...) when absent.
  std::size_t column(const std::string& name) const;
};

/// Throws ParseError on an empty stream or a row whose width differs from the header.
CsvTable read_csv(std::istream& in);

enum class CsvKind { PhaseGrid, NoiseSweep, Boundary };

/// Classifies by header; throws ParseError when required columns are missing.
CsvKind classify(const CsvTable& table);

/// Writes success_prob.svg and attempts.svg for a phase CSV, error_vs_snr.svg
/// for a noise CSV. A boundary CSV among the inputs replaces the computed
/// K*(N) curve. Empty tables and missing columns throw ParseError. Returns the
/// files written in input order.
std::vector<std::filesystem::path> render_plots(const std::vector<std::filesystem::path>& csv_paths,
                                                const std::filesystem::path& out_dir);

}  // namespace mcbd::plots
