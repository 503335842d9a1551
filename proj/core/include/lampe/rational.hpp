#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "lampe/errors.hpp"

namespace lampe {

/// Exact rational on int64, always normalized (den > 0, gcd(num, den) = 1).
/// The position-remapping floors are discontinuous, so they must never go
/// through binary floating point; this type backs every exact-floor path.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(google-explicit-constructor)

    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw domain_error("Rational: zero denominator");
        normalize();
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    /// floor(num/den) with correct rounding toward negative infinity.
    std::int64_t floor() const noexcept { return floor_div(num_, den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make_checked(n, d);
    }

    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make_checked(n, d);
    }

    friend Rational operator*(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.num_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make_checked(n, d);
    }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) noexcept { return a < b || a == b; }
    friend bool operator>(const Rational& a, const Rational& b) noexcept { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) noexcept { return b <= a; }

    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// Floor division on int64 (round toward negative infinity, den != 0).
    static std::int64_t floor_div(std::int64_t num, std::int64_t den) noexcept {
        std::int64_t q = num / den;
        std::int64_t r = num % den;
        if (r != 0 && ((r < 0) != (den < 0))) --q;
        return q;
    }

private:
    static Rational make_checked(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) {
            throw domain_error("Rational: arithmetic overflow");
        }
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static __int128 gcd128(__int128 a, __int128 b) noexcept {
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_;
    std::int64_t den_;
};

}  // namespace lampe
