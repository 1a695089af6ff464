#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polytrans {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitTranslationFailed = 1,
    kExitUsage = 2,
};

/// Entry point for the `polytrans` binary. `args` excludes the program name.
/// Results go to `out`, progress and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polytrans
