#pragma once

// Small text helpers shared by the file-format readers and the report writer.

#include <string>
#include <string_view>
#include <vector>

namespace certkit::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_ws(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Strict base-10 parse of the whole token; nullopt-like failure reported via
// the bool. Leading '+' is accepted.
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

// Shortest representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace certkit::text
