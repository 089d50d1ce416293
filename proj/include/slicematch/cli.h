#pragma once

namespace slicematch {

// Dispatches one command-line invocation. Returns the process exit code:
// 0 on success, 1 on usage errors, 2 on data errors (bad files, bad config).
int run_cli(int argc, const char* const* argv);

}  // namespace slicematch
