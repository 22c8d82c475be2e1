#pragma once

#include <string>

namespace afem {

// printf-style formatting into std::string (std::format is not available on
// the targeted toolchain).
std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace afem
