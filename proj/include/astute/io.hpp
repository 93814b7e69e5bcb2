#pragma once

#include <string>
#include <vector>

namespace astute {

// shortest decimal form that round-trips the double exactly
std::string fmt_double(double v);

std::string read_text(const std::string& path);

// write to <path>.tmp then rename, so readers never observe partial files
void write_text_atomic(const std::string& path, const std::string& content);

std::vector<std::string> split_csv_line(const std::string& line);

double parse_double_strict(const std::string& cell, bool& ok);

}  // namespace astute
