#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "biasforge/json_io.hpp"

namespace biasforge {

inline constexpr const char* kToolVersion = "0.1.0";

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // replaces every seed in the config
};

// Each command returns its exit code (0, or 4 for a non-converged fit) and
// throws Error otherwise. Every command writes a run manifest.

// World config JSON -> applicants/loans/signals/outcomes CSVs; decisions.csv
// too when the config carries an "evaluator" block.
int cmd_generate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 const CommandOptions& options = {});

// Manifest goes next to the report as <report>.manifest.json.
int cmd_estimate(const std::filesystem::path& data_dir, const std::filesystem::path& config_path,
                 const std::filesystem::path& out_path, const CommandOptions& options = {});

// scenario: baseline | pref0 | belief0 | both0 | grid. convention: expected |
// sampled. Writes scenarios.json and scenarios.csv.
int cmd_counterfact(const std::filesystem::path& data_dir, const std::filesystem::path& params_path,
                    const std::filesystem::path& out_dir, const std::string& scenario,
                    const std::string& convention = "expected",
                    const CommandOptions& options = {});

// Writes audit.json, audit.csv and model.json (one model per cell, keyed by
// scenario, when the audit config asks for the grid).
int cmd_ml_audit(const std::filesystem::path& data_dir, const std::filesystem::path& params_path,
                 const std::filesystem::path& audit_config_path,
                 const std::filesystem::path& out_dir, const CommandOptions& options = {});

// Hex SHA-256 of the canonical (sorted-key, compact) JSON text.
std::string config_hash(const Json& config);

}  // namespace biasforge
