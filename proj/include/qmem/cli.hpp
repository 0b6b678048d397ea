#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

namespace qmem::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kInfeasible = 2,
    kStepFailure = 3,
    kVerifyFailed = 4,
};

/// Entry point of the `qmem` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// `log:lo:hi:n`, `lin:lo:hi:n`, `list:a,b,...` or a bare comma list.
std::vector<double> parse_grid(std::string_view spec);

}  // namespace qmem::cli
