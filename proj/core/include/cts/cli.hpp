#pragma once

namespace cts::cli {

// Entry point behind the cts binary; split out so tests can drive the CLI
// in-process. Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace cts::cli
