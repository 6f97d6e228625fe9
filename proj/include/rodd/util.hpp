#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rodd {

// FNV-1a 64-bit. Used for config hashes and input fingerprints in run
// manifests; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Shortest decimal form that parses back to exactly the same double.
// Integral values get a ".0" suffix so YAML/JSON readers keep them typed
// as floats ("60" -> "60.0").
std::string format_double(double value);

std::string hex64(std::uint64_t value);

std::string iso8601_utc_now();

}  // namespace rodd
