#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thetalat {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParameter = 2;
inline constexpr int kExitInconclusive = 3;

// Entry point of the thetalat command; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat key=value file into `--key value` pairs; blank lines and lines starting with # are skipped.
std::vector<std::string> read_config_args(const std::string& path);

}  // namespace thetalat
