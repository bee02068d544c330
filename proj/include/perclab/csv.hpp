#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace perclab {

/// Fixed-format double rendering for CSV cells: 12 significant digits,
/// shortest of %g. Identical doubles always render identically, which is
/// what the byte-determinism guarantees rest on.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

/// Accumulates a CSV document in memory; the full byte string is the unit
/// the determinism checks compare.
class CsvBuilder {
  public:
    explicit CsvBuilder(std::initializer_list<std::string> header) {
        append_row(std::vector<std::string>(header));
        columns_ = header.size();
    }

    void row(std::vector<std::string> cells) {
        if (cells.size() != columns_)
            throw std::invalid_argument("csv row has " + std::to_string(cells.size()) +
                                        " cells, header has " + std::to_string(columns_));
        append_row(cells);
    }

    const std::string& str() const { return buf_; }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out << buf_;
        if (!out) throw std::runtime_error("write failed: " + path);
    }

  private:
    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) buf_ += ',';
            buf_ += cells[k];
        }
        buf_ += '\n';
    }

    std::string buf_;
    std::size_t columns_ = 0;
};

}  // namespace perclab
