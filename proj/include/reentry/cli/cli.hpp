#pragma once

#include <ostream>

namespace reentry::cli
{
    inline constexpr int kUsageError = 64;

    /// `reentry analyze ...`; returns the process exit code. The summary
    /// table goes to out, diagnostics to err.
    int run(int argc, char const *const *argv, std::ostream &out, std::ostream &err);
}
