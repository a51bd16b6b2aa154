#pragma once

// Parsing and formatting of values in flat key=value files.

#include <cstdint>
#include <string>
#include <vector>

namespace mixsent::kv {

std::uint64_t parse_uint(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::vector<std::size_t> parse_uint_list(const std::string& key, const std::string& value);
std::vector<double> parse_double_list(const std::string& key, const std::string& value);
std::vector<std::string> split_list(const std::string& value);

// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::string format_list(const std::vector<std::size_t>& values);
std::string format_list(const std::vector<double>& values);

std::string trim(const std::string& s);

}  // namespace mixsent::kv
