#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aes::csv {

/// RFC-4180 style: fields with commas, quotes or newlines are quoted,
/// embedded quotes doubled.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

/// Parses a whole document (quoted fields may span lines). A trailing
/// newline does not produce an empty record.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace aes::csv
