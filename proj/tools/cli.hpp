#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace exphormer::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 domain failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name: {"generate", "--n", "64", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string& path);

}  // namespace exphormer::cli
