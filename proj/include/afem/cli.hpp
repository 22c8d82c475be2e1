#pragma once

namespace afem {

// Entry point of the experiment harness (the `afem` binary forwards here so
// tests can drive the CLI in-process). Returns the process exit code:
//   0  run finished through one of its stop rules
//   1  runtime failure (I/O, solver failure, invalid mesh contents)
//   2  configuration / usage errors
//   3  run aborted by a safety cap (j_cap or k_cap)
int afem_cli_main(int argc, char** argv);

}  // namespace afem
