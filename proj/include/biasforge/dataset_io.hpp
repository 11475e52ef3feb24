#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "biasforge/dataset.hpp"

namespace biasforge {

// Parsed CSV: header plus rows, each tagged with its 1-based source line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
  std::string source;

  std::size_t column(std::string_view name) const;  // throws Data if absent
};

// RFC-4180: comma separated, double-quote quoting, CRLF or LF line ends.
CsvTable parse_csv(std::string_view text, std::string source);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string format_number(double v);  // shortest round-trip form
double parse_number(std::string_view text, const CsvTable& table, std::size_t row);

// applicants.csv, loans.csv, signals.csv, outcomes.csv
void write_full_sample(const std::filesystem::path& dir, const FullSampleDataset& dataset);
FullSampleDataset read_full_sample(const std::filesystem::path& dir);

// decisions.csv: applicant_id,t,approved
void write_decisions(const std::filesystem::path& path, const FullSampleDataset& dataset,
                     const std::vector<DecisionRecord>& records);

// applicants.csv + loans.csv + decisions.csv + signals.csv (approved loans).
DecisionLog read_decision_log(const std::filesystem::path& dir);

}  // namespace biasforge
