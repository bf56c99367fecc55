#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace safesynth {

/// Writes to `path`.tmp and renames over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string FormatExact(double v);

}  // namespace safesynth
