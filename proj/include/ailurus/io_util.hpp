#pragma once

#include <string>
#include <string_view>

namespace ailurus {

// Writes to a temp file in the same directory, then renames into place.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace ailurus
