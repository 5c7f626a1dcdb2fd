#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mosbench {

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
/// Returns false if a quoted field is unterminated.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

}  // namespace mosbench
