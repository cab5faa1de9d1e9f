#pragma once

#include <ostream>

namespace betafit::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
enum Exit : int {
    ok = 0,
    io_error = 1,
    bad_input = 2,
    degenerate = 3,
    not_converged = 4,
    selection_failed = 5,
    monte_carlo_failed = 6,
    normalization_failed = 7,
    tune_failed = 8,
};

// Entry point shared by the executable and the tests. Data goes to `out`,
// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace betafit::cli
