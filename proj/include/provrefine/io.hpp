#pragma once

#include <string>

namespace provrefine {

// Whole-file helpers; both throw InvalidArgument naming the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace provrefine
