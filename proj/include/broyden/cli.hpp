#pragma once

#include <iosfwd>

namespace broyden {

// Exit codes: 0 success, 1 usage/input error, 2 numerical error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace broyden
