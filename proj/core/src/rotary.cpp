#include "lampe/rotary.hpp"

#include <cmath>

namespace lampe {

namespace {

void check_dim(std::size_t got, int expected, const char* what) {
    if (static_cast<int>(got) != expected) {
        throw precondition_error(std::string(what) + ": dimension mismatch, got " +
                                 std::to_string(got) + ", basis expects " +
                                 std::to_string(expected));
    }
}

}  // namespace

RotaryBasis RotaryBasis::create(int head_dim, double base) {
    if (head_dim <= 0 || head_dim % 2 != 0) {
        throw invalid_config("RotaryBasis: head_dim must be even and positive, got " +
                             std::to_string(head_dim));
    }
    if (!(base > 1.0)) {
        throw invalid_config("RotaryBasis: base must be > 1");
    }
    RotaryBasis basis;
    basis.head_dim = head_dim;
    basis.base = base;
    basis.angles.resize(static_cast<std::size_t>(head_dim) / 2);
    for (std::size_t t = 0; t < basis.angles.size(); ++t) {
        basis.angles[t] =
            std::pow(base, -2.0 * static_cast<double>(t) / static_cast<double>(head_dim));
    }
    return basis;
}

void apply_rotation_into(std::span<const double> x, std::int64_t p, const RotaryBasis& basis,
                         std::span<double> out) {
    check_dim(x.size(), basis.head_dim, "apply_rotation");
    check_dim(out.size(), basis.head_dim, "apply_rotation (out)");
    const double pos = static_cast<double>(p);
    for (std::size_t t = 0; t < basis.angles.size(); ++t) {
        const double angle = pos * basis.angles[t];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double x0 = x[2 * t];
        const double x1 = x[2 * t + 1];
        out[2 * t] = x0 * c - x1 * s;
        out[2 * t + 1] = x0 * s + x1 * c;
    }
}

std::vector<double> apply_rotation(std::span<const double> x, std::int64_t p,
                                   const RotaryBasis& basis) {
    std::vector<double> out(x.size());
    apply_rotation_into(x, p, basis, out);
    return out;
}

double relative_logit(std::span<const double> q, std::span<const double> k, std::int64_t rel,
                      const RotaryBasis& basis, double scale) {
    check_dim(q.size(), basis.head_dim, "relative_logit (q)");
    check_dim(k.size(), basis.head_dim, "relative_logit (k)");
    const double pos = static_cast<double>(rel);
    double dot = 0.0;
    for (std::size_t t = 0; t < basis.angles.size(); ++t) {
        const double angle = pos * basis.angles[t];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double k0 = k[2 * t] * c - k[2 * t + 1] * s;
        const double k1 = k[2 * t] * s + k[2 * t + 1] * c;
        dot += q[2 * t] * k0 + q[2 * t + 1] * k1;
    }
    return scale * dot;
}

RotationCoeffs rotation_coeffs(std::int64_t p, const RotaryBasis& basis) {
    RotationCoeffs coeffs;
    const std::size_t half = basis.angles.size();
    coeffs.cos_v.resize(half);
    coeffs.sin_v.resize(half);
    const double pos = static_cast<double>(p);
    for (std::size_t t = 0; t < half; ++t) {
        const double angle = pos * basis.angles[t];
        coeffs.cos_v[t] = std::cos(angle);
        coeffs.sin_v[t] = std::sin(angle);
    }
    return coeffs;
}

void apply_coeffs_into(std::span<const double> x, const RotationCoeffs& coeffs,
                       std::span<double> out) {
    for (std::size_t t = 0; t < coeffs.cos_v.size(); ++t) {
        const double c = coeffs.cos_v[t];
        const double s = coeffs.sin_v[t];
        const double x0 = x[2 * t];
        const double x1 = x[2 * t + 1];
        out[2 * t] = x0 * c - x1 * s;
        out[2 * t + 1] = x0 * s + x1 * c;
    }
}

}  // namespace lampe
