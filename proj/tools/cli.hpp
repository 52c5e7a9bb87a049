#pragma once

#include <ostream>

namespace hilmeme::cli {

/// Runs the `hilmeme` command line. Output goes to `out`; failures are
/// reported on `err` as one json object {"error", "message", "fields"} and a
/// nonzero return value.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hilmeme::cli
