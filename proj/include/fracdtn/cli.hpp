#pragma once

namespace fracdtn {

/// Entry point of the command line driver. Exit codes: 0 success,
/// 2 validation error, 3 ill-posed scenario, 4 numerical failure.
int cli_main(int argc, char** argv);

}  // namespace fracdtn
