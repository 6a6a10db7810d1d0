#pragma once

namespace biofuse {

/// Exit codes: 0 success, 1 usage, 2 data or config error, 3 numerical failure.
/// Errors go to stderr prefixed `E:<code>:`.
int run_cli(int argc, char** argv);

} // namespace biofuse
