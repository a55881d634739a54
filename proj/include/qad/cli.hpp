#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qad::cli {

enum ExitCode : int { ok = 0, config_error = 2, solver_failure = 3 };

/// Runs one qadsim invocation in-process. `args` excludes the program name,
/// e.g. {"dispersion", "--config", "run.json", "--out", "results"}.
/// Diagnostics go to `err`, a one-line summary per artifact to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count: flag, then QADSIM_WORKERS, then the config, then the
/// available hardware parallelism.
int resolve_workers(int flag, int config_value);

}  // namespace qad::cli
