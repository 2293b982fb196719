#pragma once

#include <stdexcept>
#include <string>

namespace pdereg {

// Thrown on invalid user input / contract violations. Mapped to exit code 1
// by the CLI.
struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical procedure fails (solver budget exceeded, NaN
// objective, degenerate data). Mapped to exit code 2 by the CLI.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested dense computation exceeds its configured size budget.
struct capacity_error : invalid_argument {
    using invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_argument(msg);
}

}  // namespace pdereg
