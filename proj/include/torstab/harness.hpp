#pragma once

// Experiment orchestration: subcommand drivers that wire configuration,
// estimators and verifications to flat-file outputs.

#include <string>

#include "json.hpp"
#include "torstab/config.hpp"

namespace torstab {

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 1 runtime failure, 2 config error, 3 check failed
    nlohmann::json summary;
    std::string summary_path;
};

// Q(t) Monte Carlo run: CSV + JSON + SVG into cfg.out_dir.
RunOutcome run_qcurve(const RunConfig& cfg);

// Position shifts via the time-shift recipe: velocity shift at -tau, both
// trajectories evolved to 0, Q measured over [0, T].
RunOutcome run_position_recipe(const RunConfig& cfg);

// which: "gibbs" | "shift" | "potential".
RunOutcome run_checks(const RunConfig& cfg, const std::string& which);

// Cross product of the sweep lists; per-cell outputs plus a summary table.
RunOutcome run_sweep(const RunConfig& cfg);

}  // namespace torstab
