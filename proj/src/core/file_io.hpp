#pragma once

#include <filesystem>
#include <string>

namespace thumbtrak {

/// Whole-file helpers. Both throw Error(Io) with the path in the message.
std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &contents);

} // namespace thumbtrak
