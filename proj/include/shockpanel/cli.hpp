#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shockpanel::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit over a byte buffer, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::filesystem::path& path);

/// Entry point behind main(). Exit codes: 0 success, 1 data error,
/// 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace shockpanel::cli
