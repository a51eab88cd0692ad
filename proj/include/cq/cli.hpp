#pragma once

namespace cq::cli {

/// Entry point for the `cq` tool. Returns the process exit status:
/// 0 success, 2 usage error, 1 numerical failure.
int dispatch(int argc, const char* const* argv);

}  // namespace cq::cli
