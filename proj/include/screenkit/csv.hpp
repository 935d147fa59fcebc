#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace screenkit::csv {

/// Splits one RFC 4180 record. `in` must be positioned at the start of a
/// record; quoted fields may span lines. Returns false at end of input.
/// `line` is advanced by the number of physical lines consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line);

/// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly `v`; "NA" for NaN.
std::string format_double(double v);

double parse_double(std::string_view s);

} // namespace screenkit::csv
