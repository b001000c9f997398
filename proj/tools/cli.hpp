#pragma once

#include <iosfwd>

namespace fogsim::cli {

enum ExitCode : int { ok = 0, usage = 1, runtime = 2 };

/// Entry point shared by the executable and the tests. Data goes to `out`,
/// diagnostics to `err`.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fogsim::cli
