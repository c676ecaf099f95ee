#pragma once

#include <iosfwd>
#include <string>

namespace pcd {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitInfeasible = 2, kExitNumerical = 3 };

/// Environment variable holding the worker count for population evaluation.
inline constexpr const char* kWorkersEnv = "PCD_WORKERS";

/// Entry point of the `pcd` tool. Messages go to `out`, errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace pcd
