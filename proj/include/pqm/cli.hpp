#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pqm::cli {

/// Entry point behind the `pqm` binary. Subcommands: train, assess, eval,
/// stats, pqm-gt, tile. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqm::cli
