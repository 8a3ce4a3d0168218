#pragma once

#include <ostream>

namespace sfm::cli {

/// Entry point for the `sfm` tool. Returns 0 on success, 1 on usage errors,
/// 2 on data errors and 3 on numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sfm::cli
