#pragma once

#include <iosfwd>
#include <string>

namespace aura::cli {

// "aura <version> (corpus schema <schema_version>)"
std::string version_line();

// Parses argv and dispatches to the score/pairs/mix/audit subcommands.
// Exit codes: 0 success, 1 schema/IO/invariant errors, 2 judge failure
// after retries. Reports go to `out`; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aura::cli
