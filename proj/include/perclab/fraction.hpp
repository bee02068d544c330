#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perclab {

/// Exact rational number used for CLI / manifest parameters such as mesh
/// sizes and radii, so that "1/512" survives a serialization round trip
/// without decimal drift.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    friend bool operator==(const Fraction&, const Fraction&) = default;

    /// Accepts "p/q", integers ("3", "-2") and plain decimals ("0.25").
    /// Decimals are converted exactly via powers of ten and reduced.
    static Fraction parse(std::string_view text);
};

namespace detail {

inline std::int64_t parse_i64(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty number");
    std::size_t pos = 0;
    bool neg = false;
    if (s[pos] == '+' || s[pos] == '-') {
        neg = s[pos] == '-';
        ++pos;
    }
    if (pos == s.size()) throw std::invalid_argument("malformed number: '" + std::string(s) + "'");
    std::int64_t v = 0;
    for (; pos < s.size(); ++pos) {
        if (s[pos] < '0' || s[pos] > '9')
            throw std::invalid_argument("malformed number: '" + std::string(s) + "'");
        v = v * 10 + (s[pos] - '0');
        if (v < 0) throw std::invalid_argument("number out of range: '" + std::string(s) + "'");
    }
    return neg ? -v : v;
}

}  // namespace detail

inline Fraction Fraction::parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty fraction");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Fraction f;
        f.num = detail::parse_i64(text.substr(0, slash));
        f.den = detail::parse_i64(text.substr(slash + 1));
        if (f.den <= 0) throw std::invalid_argument("fraction denominator must be positive: '" + std::string(text) + "'");
        std::int64_t g = std::gcd(f.num < 0 ? -f.num : f.num, f.den);
        if (g > 1) {
            f.num /= g;
            f.den /= g;
        }
        return f;
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        std::string_view whole = text.substr(0, dot);
        std::string_view frac = text.substr(dot + 1);
        if (frac.empty()) return parse(whole);
        bool neg = !whole.empty() && whole[0] == '-';
        std::string_view digits = whole;
        if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) digits.remove_prefix(1);
        std::int64_t w = digits.empty() ? 0 : detail::parse_i64(digits);
        std::int64_t den = 1;
        std::int64_t f = 0;
        for (char ch : frac) {
            if (ch < '0' || ch > '9')
                throw std::invalid_argument("malformed decimal: '" + std::string(text) + "'");
            if (den > (1LL << 60) / 10)
                throw std::invalid_argument("too many decimal digits: '" + std::string(text) + "'");
            den *= 10;
            f = f * 10 + (ch - '0');
        }
        std::int64_t num = w * den + f;
        if (neg) num = -num;
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        return Fraction{num, den};
    }
    return Fraction{detail::parse_i64(text), 1};
}

/// Seeds are accepted in decimal or hexadecimal ("0x..." / "0X...").
inline std::uint64_t parse_seed(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty seed");
    std::uint64_t v = 0;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        for (char ch : text.substr(2)) {
            int d;
            if (ch >= '0' && ch <= '9') d = ch - '0';
            else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
            else if (ch >= 'A' && ch <= 'F') d = ch - 'A' + 10;
            else throw std::invalid_argument("malformed hex seed: '" + std::string(text) + "'");
            if (v >> 60) throw std::invalid_argument("seed out of range: '" + std::string(text) + "'");
            v = (v << 4) | static_cast<std::uint64_t>(d);
        }
        return v;
    }
    for (char ch : text) {
        if (ch < '0' || ch > '9')
            throw std::invalid_argument("malformed seed: '" + std::string(text) + "'");
        std::uint64_t next = v * 10 + static_cast<std::uint64_t>(ch - '0');
        if (next / 10 != v) throw std::invalid_argument("seed out of range: '" + std::string(text) + "'");
        v = next;
    }
    return v;
}

}  // namespace perclab
