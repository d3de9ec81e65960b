#pragma once

// The analyze, sweep, verify and bernstein commands. Each returns its report
// text and exit code instead of writing files, so tests can run them directly.

#include <string>

#include "wdstop/cli/config.hpp"

namespace wdstop::cli {

enum class Format { Json, Csv };

struct CommandResult {
    int exit_code = 0;
    std::string report;
    std::string plot_data;  // sweep only
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int unexpected = 1;
inline constexpr int config = 2;
inline constexpr int conflict = 3;
}  // namespace exit_code

std::string version();

/// 17 significant digits, '.' decimal point, independent of the locale.
std::string format_number(double v);

CommandResult cmd_analyze(const AnalysisConfig& c, Format format = Format::Json);
CommandResult cmd_sweep(const AnalysisConfig& c, Format format = Format::Csv);
CommandResult cmd_verify(const AnalysisConfig& c, Format format = Format::Json);
CommandResult cmd_bernstein(const AnalysisConfig& c, Format format = Format::Json);

/// Structured error report with exit code 2 (config or library errors).
CommandResult error_result(const std::string& command, const std::exception& e, const AnalysisConfig* c = nullptr);

}  // namespace wdstop::cli
