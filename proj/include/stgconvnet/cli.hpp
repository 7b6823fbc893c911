#pragma once

namespace stg {

/// Environment variable naming the config file when --config is absent.
inline constexpr const char* kConfigEnv = "STGCONVNET_CONFIG";

/// Runs one subcommand (train, sample, recover, inpaint, eval).
/// Returns 0 on success, 1 for usage or configuration errors, 2 for I/O or
/// format errors and 3 for numeric divergence.
int dispatch(int argc, char** argv);

}  // namespace stg
