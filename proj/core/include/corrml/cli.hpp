#pragma once

namespace corrml {

// Runs the full command-line interface. Returns the process exit code:
// 0 success, 1 usage error, 2 data error, 3 numeric failure.
int cli_run(int argc, char** argv);

}  // namespace corrml
