#pragma once

#include <srep/experiments.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace srep::checks {

// Outcome of one acceptance criterion. measured carries named scalar
// readouts (worst errors, best scores, counts) for reporting and export.
// known_red marks a criterion documented as unattainable (see the README's
// test section); it still runs and reports honestly, but suite-level exit
// status may treat its failure as expected.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool known_red = false;
    std::string detail;
    double seconds = 0.0;
    std::vector<std::pair<std::string, double>> measured;
};

struct AcceptanceOptions {
    std::uint64_t seed = 7;
    Index jobs = 1;
    std::string filter;       // id or name substring; empty selects everything
    std::string scratch_dir;  // experiment output root; empty uses system temp
    std::function<void(const CriterionResult&)> on_result;  // progress hook
};

// Runs the selected criteria in id order. A thrown exception inside a
// criterion records a failure with the message as detail; it never aborts
// the suite.
[[nodiscard]] std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

// The same suite rendered as result rows (experiment "unit_oracles",
// n = criterion id) for the experiment driver's CSV and summary output.
[[nodiscard]] std::vector<ResultRow> unit_oracle_rows(const AcceptanceOptions& options);

}  // namespace srep::checks
