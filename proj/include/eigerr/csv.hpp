#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "eigerr/error.hpp"

namespace eigerr {

// Shortest decimal string that round-trips the double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw numeric_error("format_double: to_chars failed");
    return {buf, end};
}

// Header-first CSV writer. Cells are pre-formatted strings; an empty optional
// produces an empty field.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::initializer_list<std::string_view> header) : out_(path) {
        if (!out_) throw numeric_error("cannot open " + path + " for writing");
        bool first = true;
        for (auto h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
        columns_ = header.size();
    }

    class Row {
    public:
        explicit Row(CsvWriter& w) : w_(w) {}
        Row(const Row&) = delete;
        ~Row() { w_.out_ << '\n'; }
        Row& operator<<(double v) { return cell(format_double(v)); }
        Row& operator<<(long long v) { return cell(std::to_string(v)); }
        Row& operator<<(std::size_t v) { return cell(std::to_string(v)); }
        Row& operator<<(int v) { return cell(std::to_string(v)); }
        Row& operator<<(bool v) { return cell(v ? "1" : "0"); }
        Row& operator<<(std::string_view s) { return cell(s); }
        Row& operator<<(const std::optional<double>& v) { return v ? *this << *v : cell(""); }

    private:
        Row& cell(std::string_view s) {
            if (n_++ > 0) w_.out_ << ',';
            w_.out_ << s;
            return *this;
        }
        CsvWriter& w_;
        std::size_t n_ = 0;
    };

    Row row() { return Row(*this); }
    std::size_t columns() const { return columns_; }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace eigerr
