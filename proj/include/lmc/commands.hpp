#pragma once

#include "lmc/config.hpp"

#include <json.hpp>

#include <string>

namespace lmc {

inline constexpr const char* kVersion = "1.0.0";

/// Outcome of one command: the JSON report, its CSV view and a short
/// human-readable table.
struct Report {
    nlohmann::json json;
    std::string csv;
    std::string table;
    int exit_code = 0;
};

/// Commands: classify, deficit, novikov, jump, hilbert. Throws the library
/// errors; see exit_code_for.
Report run_command(const std::string& command, const RunConfig& config);

/// 1 for configuration and validation errors, 2 for numerical failures.
int exit_code_for(const std::exception& e);

/// Report body for a failed run.
nlohmann::json error_report(const std::string& command, const std::exception& e);

/// Catalog listing as a report.
Report catalog_report();

/// Doubles as JSON numbers, infinities as the strings "inf" / "-inf".
nlohmann::json json_number(double v);

}  // namespace lmc
