#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lampe/errors.hpp"

namespace lampe {

/// Parameters of the length-to-mapping-length curve
///   m(l) = ceiling / (1 + e^{-(a*l + b)})
/// plus fit diagnostics. `ceiling` is the curve maximum (the curve maximum L).
struct SigmoidParams {
    std::int64_t ceiling = 0;
    double a = 0.0;
    double b = 0.0;
    double residual = 0.0;      // RMS error in mapping-length units
    std::size_t points_used = 0;

    void validate() const;
};

/// One measured (input length, best mapping length) pair. The mapping length
/// is kept real-valued: fitted observations need not be whole tokens, and
/// noiseless planted curves must round-trip exactly.
struct ObservationPoint {
    std::int64_t input_length = 0;
    double optimal_mapping_length = 0.0;
};

/// Sigmoid value at l, rounded to nearest (ties away from zero) and clamped
/// to [1, l]; m >= l collapses to identity remapping downstream.
std::int64_t mapping_length(std::int64_t l, const SigmoidParams& p);

/// Unrounded, unclamped curve value; always in (0, ceiling).
double mapping_length_real(std::int64_t l, const SigmoidParams& p);

/// Least squares on the logit transform: logit(m/ceiling) = a*l + b is linear
/// in (a, b), so the fit is closed-form and deterministic. Residual is
/// reported in the original space.
SigmoidParams fit_sigmoid(std::span<const ObservationPoint> points, std::int64_t ceiling);

/// Default curve ceiling: floor(3n/4) of the pretraining window. Mapping
/// beyond ~3/4 of the trained range costs more than it buys, so the ceiling
/// stays below n.
std::int64_t default_ceiling(std::int64_t n);

/// CSV with header columns input_length,optimal_mapping_length.
std::vector<ObservationPoint> read_observations_csv(const std::filesystem::path& path);
void write_observations_csv(std::span<const ObservationPoint> points,
                            const std::filesystem::path& path);

/// JSON object {L, a, b, residual, points_used}.
std::string params_to_json(const SigmoidParams& p);
SigmoidParams parse_params_json(const std::string& text);
SigmoidParams read_params_json(const std::filesystem::path& path);

}  // namespace lampe
