#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "pdereg/errors.hpp"

namespace pdereg {

// Exact rational arithmetic for rate exponents; keeps reports free of float
// drift (eg. 12/13 stays 12/13).
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        require(d != 0, "rational: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
    friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
    friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
    friend Rational operator/(Rational a, Rational b) {
        require(b.num != 0, "rational: division by zero");
        return {a.num * b.den, a.den * b.num};
    }
    friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
    friend bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }
    friend bool operator<=(Rational a, Rational b) { return a.num * b.den <= b.num * a.den; }
};

// Best rational approximation by continued fractions; exact for the
// small-denominator values used in rate targets.
inline Rational rational_from_double(double x, std::int64_t max_den = 1000000) {
    require(std::abs(x) < 9.0e15, "rational: value out of range");
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double fl = std::floor(r);
        const std::int64_t a = static_cast<std::int64_t>(fl);
        const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double frac = r - fl;
        if (frac < 1e-12) break;
        r = 1.0 / frac;
    }
    return Rational(p1, q1);
}

// Parses "p/q", integers, or plain decimals ("0.5" -> 1/2).
inline Rational parse_rational(const std::string& s) {
    require(!s.empty(), "rational: empty string");
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
    const auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s));
    const std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    require(tail.size() <= 9, "rational: too many decimal digits in '" + s + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < tail.size(); ++i) den *= 10;
    std::int64_t whole = head.empty() || head == "-" ? 0 : std::stoll(head);
    std::int64_t frac = tail.empty() ? 0 : std::stoll(tail);
    const bool neg = !head.empty() && head[0] == '-';
    std::int64_t num = whole * den + (neg ? -frac : frac);
    return Rational(num, den);
}

}  // namespace pdereg
