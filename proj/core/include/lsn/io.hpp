#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lsn {

/// Write-temp-then-rename so run artifacts are never observed half-written.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

std::string fmt17(double v);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

}  // namespace lsn
