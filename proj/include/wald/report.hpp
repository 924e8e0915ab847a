#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "wald/errors.hpp"

namespace wald {

// Fixed 12-significant-digit formatting keeps report files byte-identical
// across runs with the same inputs and seed.
inline std::string fmt_num(double v) {
    if (v == std::numeric_limits<double>::infinity()) return "inf";
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size())
            raise(ErrorKind::PreconditionViolated, "csv row width mismatch");
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string out = join(header_);
        for (const auto& r : rows_) out += join(r);
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) raise(ErrorKind::MalformedInput, "cannot open " + path + " for writing");
        f << str();
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        return line;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::MalformedInput, "cannot open " + path + " for writing");
    f << content;
}

} // namespace wald
