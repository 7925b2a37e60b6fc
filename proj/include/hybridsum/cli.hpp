#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hybridsum {

/// Entry point of the `hybridsum` command. Data goes to `out`; usage text and
/// the one-line `error: <kind>: <message>` failure report go to `err`.
/// Returns 0 on success, 2 for usage and configuration errors, 1 otherwise.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hybridsum
