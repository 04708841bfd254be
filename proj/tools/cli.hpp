#pragma once

namespace boltzinv::cli {

/// Runs one subcommand; returns 0 on success, 1 on domain errors, 2 on usage or input errors.
int dispatch(int argc, char** argv);

}  // namespace boltzinv::cli
