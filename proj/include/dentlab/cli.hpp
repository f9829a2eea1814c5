#pragma once

#include "dentlab/dcapprox.hpp"
#include "dentlab/slicing.hpp"

#include <string>
#include <vector>

namespace dentlab::cli {

// Parses argv, dispatches the subcommand, emits the report. Exit codes:
// 0 success, 2 bad input (flags, schema, malformed JSON, validation),
// 3 capacity limits or unwritable output.
int run(int argc, const char* const* argv);

// In-process variant for tests; args exclude the program name.
int run(const std::vector<std::string>& args);

// CSV renderings used by the subcommands, one header line each.
std::string stages_csv(const ScoredMap& f, const DerivationTrace& trace);
std::string scan_csv(const SsScanStats& stats);
std::string curve_csv(const std::vector<ErrorCurveRow>& rows);
std::string profile_csv(const SlicingProfile& profile);

}  // namespace dentlab::cli
