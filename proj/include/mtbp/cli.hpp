#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mtbp {

inline constexpr const char* kVersion = "0.1.0";

// Exit statuses of run_cli.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// 64-bit FNV-1a, used to fingerprint model files in the manifest.
std::uint64_t fnv1a(const std::string& bytes);

// Runs one command line (without the program name). Results go to
// <out>/results.csv and <out>/manifest.json; summaries go to `out`,
// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtbp
