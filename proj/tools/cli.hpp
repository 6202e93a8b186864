#pragma once

#include <iosfwd>

namespace expint::cli {

/// Exit codes: 0 success, 1 configuration error, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace expint::cli
