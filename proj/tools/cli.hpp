#pragma once

#include <iosfwd>

namespace uniboost {

/// Entry point of the `uniboost` command. Returns the process exit code:
/// 0 success, 1 domain error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uniboost
