#pragma once

#include <iosfwd>

namespace capspace::cli {

/// Exit codes: 0 success, 1 validation / usage / missing input, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace capspace::cli
