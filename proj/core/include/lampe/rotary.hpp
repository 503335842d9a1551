#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lampe/errors.hpp"

namespace lampe {

/// Rotary frequency basis: D/2 angles theta_t = base^(-2t/D), t = 0..D/2-1.
/// angles[0] == 1 and the sequence is strictly decreasing for base > 1.
struct RotaryBasis {
    int head_dim = 0;
    double base = 10000.0;
    std::vector<double> angles;

    static RotaryBasis create(int head_dim, double base = 10000.0);
};

/// Rotates each interleaved pair (x[2t], x[2t+1]) by the angle p * theta_t.
/// Norm-preserving; p may be negative.
std::vector<double> apply_rotation(std::span<const double> x, std::int64_t p,
                                   const RotaryBasis& basis);

/// Allocation-free variant writing into out.
void apply_rotation_into(std::span<const double> x, std::int64_t p, const RotaryBasis& basis,
                         std::span<double> out);

/// Pairwise-form attention logit: scale * <q, rotate(k, rel)>. Whenever
/// rel = j - i, this equals scale * <rotate(q, i), rotate(k, j)> (rotation
/// composition identity), which is what ties absolute-position rotation to
/// relative-position attention.
double relative_logit(std::span<const double> q, std::span<const double> k, std::int64_t rel,
                      const RotaryBasis& basis, double scale);

/// cos/sin of p * theta_t for all t, used to amortize rotations over many
/// vectors at the same position.
struct RotationCoeffs {
    std::vector<double> cos_v;
    std::vector<double> sin_v;
};

RotationCoeffs rotation_coeffs(std::int64_t p, const RotaryBasis& basis);

void apply_coeffs_into(std::span<const double> x, const RotationCoeffs& coeffs,
                       std::span<double> out);

}  // namespace lampe
