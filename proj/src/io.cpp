#include "astute/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace astute {

std::string fmt_double(double v) {
    char buf[40];
    // 17 significant digits always round-trip; trim to the shortest form that
    // still parses back to the same bits
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open file for writing: " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double_strict(const std::string& cell, bool& ok) {
    std::size_t begin = cell.find_first_not_of(" \t");
    std::size_t end = cell.find_last_not_of(" \t");
    if (begin == std::string::npos) {
        ok = false;
        return 0.0;
    }
    double value = 0.0;
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end + 1;
    auto [ptr, ec] = std::from_chars(first, last, value);
    ok = ec == std::errc() && ptr == last;
    return value;
}

}  // namespace astute
