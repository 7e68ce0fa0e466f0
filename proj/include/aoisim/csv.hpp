#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "aoisim/errors.hpp"

namespace aoisim {

// CSV conventions: '.' decimal separator, UNIX newlines, UTF-8, shortest
// round-trip float formatting, "inf"/"nan" literals for non-finite cells.

inline std::string csv_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline std::string csv_num(std::int64_t v) { return std::to_string(v); }
inline std::string csv_num(std::uint64_t v) { return std::to_string(v); }

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open for writing: " + path);
    }

    void header(const std::vector<std::string>& cols) {
        write_row_strings(cols);
    }

    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw IoError("write failed: " + path_);
    }

    template <class... Ts>
    void row(const Ts&... cells) {
        std::vector<std::string> s;
        (s.push_back(cell_to_string(cells)), ...);
        write_row_strings(s);
    }

private:
    static std::string cell_to_string(const std::string& s) { return s; }
    static std::string cell_to_string(const char* s) { return s; }
    static std::string cell_to_string(double v) { return csv_num(v); }
    static std::string cell_to_string(std::int64_t v) { return csv_num(v); }
    static std::string cell_to_string(std::uint64_t v) { return csv_num(v); }
    static std::string cell_to_string(int v) { return std::to_string(v); }
    static std::string cell_to_string(bool v) { return v ? "true" : "false"; }

    std::string path_;
    std::ofstream out_;
};

} // namespace aoisim
