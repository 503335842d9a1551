#include "lampe/attention.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lampe/parallel.hpp"

namespace lampe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// mt19937_64 output mapped to [-1, 1) via the top 53 bits; the standard
// fully specifies the engine, so fixtures are identical across platforms
// (library uniform_real_distribution is not, hence the manual mapping).
double unit_double(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

}  // namespace

void AttentionBatch::validate() const {
    if (heads < 1 || seq_len < 1 || head_dim < 1 || head_dim % 2 != 0) {
        throw invalid_config("AttentionBatch: need heads >= 1, seq_len >= 1, even head_dim >= 2");
    }
    const std::size_t expected = static_cast<std::size_t>(heads) *
                                 static_cast<std::size_t>(seq_len) *
                                 static_cast<std::size_t>(head_dim);
    if (q.size() != expected || k.size() != expected || v.size() != expected) {
        throw invalid_config("AttentionBatch: tensor sizes inconsistent with H x l x D");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw invalid_config("AttentionBatch: scale must be finite and positive");
    }
    for (const auto* t : {&q, &k, &v}) {
        for (const double x : *t) {
            if (!std::isfinite(x)) throw invalid_config("AttentionBatch: non-finite tensor entry");
        }
    }
}

AttentionBatch make_random_batch(std::uint64_t seed, int heads, std::int64_t seq_len,
                                 int head_dim) {
    AttentionBatch batch;
    batch.heads = heads;
    batch.seq_len = seq_len;
    batch.head_dim = head_dim;
    batch.scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const std::size_t n = static_cast<std::size_t>(heads) * static_cast<std::size_t>(seq_len) *
                          static_cast<std::size_t>(head_dim);
    batch.q.resize(n);
    batch.k.resize(n);
    batch.v.resize(n);
    std::mt19937_64 rng(seed);
    for (auto* t : {&batch.q, &batch.k, &batch.v}) {
        for (double& x : *t) x = unit_double(rng);
    }
    batch.validate();
    return batch;
}

std::span<const double> PartialAttention::output_row(int h, std::int64_t i) const {
    const std::size_t off = (static_cast<std::size_t>(h) * static_cast<std::size_t>(rows()) +
                             static_cast<std::size_t>(i - row_begin)) *
                            static_cast<std::size_t>(head_dim);
    return {output.data() + off, static_cast<std::size_t>(head_dim)};
}

std::span<double> PartialAttention::output_row(int h, std::int64_t i) {
    const std::size_t off = (static_cast<std::size_t>(h) * static_cast<std::size_t>(rows()) +
                             static_cast<std::size_t>(i - row_begin)) *
                            static_cast<std::size_t>(head_dim);
    return {output.data() + off, static_cast<std::size_t>(head_dim)};
}

double PartialAttention::lse_at(int h, std::int64_t i) const {
    return lse[static_cast<std::size_t>(h) * static_cast<std::size_t>(rows()) +
               static_cast<std::size_t>(i - row_begin)];
}

double& PartialAttention::lse_at(int h, std::int64_t i) {
    return lse[static_cast<std::size_t>(h) * static_cast<std::size_t>(rows()) +
               static_cast<std::size_t>(i - row_begin)];
}

PartialAttention PartialAttention::slice(std::int64_t begin, std::int64_t end) const {
    if (begin < row_begin || end > row_end || begin > end) {
        throw precondition_error("PartialAttention::slice: range outside covered rows");
    }
    PartialAttention out = make_empty_partial(heads, head_dim, begin, end);
    out.visited_pairs = visited_pairs;
    for (int h = 0; h < heads; ++h) {
        for (std::int64_t i = begin; i < end; ++i) {
            const auto src = output_row(h, i);
            auto dst = out.output_row(h, i);
            std::memcpy(dst.data(), src.data(), src.size() * sizeof(double));
            out.lse_at(h, i) = lse_at(h, i);
        }
    }
    return out;
}

PartialAttention make_empty_partial(int heads, int head_dim, std::int64_t row_begin,
                                    std::int64_t row_end) {
    if (row_end < row_begin) throw precondition_error("make_empty_partial: bad row range");
    PartialAttention p;
    p.heads = heads;
    p.head_dim = head_dim;
    p.row_begin = row_begin;
    p.row_end = row_end;
    const std::size_t rows = static_cast<std::size_t>(row_end - row_begin);
    p.output.assign(static_cast<std::size_t>(heads) * rows * static_cast<std::size_t>(head_dim),
                    0.0);
    p.lse.assign(static_cast<std::size_t>(heads) * rows, kNegInf);
    return p;
}

DenseAttentionResult dense_oracle_attention(const AttentionBatch& batch,
                                            const RelPositionMatrix& pe,
                                            const RotaryBasis& basis) {
    batch.validate();
    if (pe.size() != batch.seq_len) {
        throw precondition_error("dense_oracle_attention: pe.l != batch.seq_len");
    }
    if (basis.head_dim != batch.head_dim) {
        throw precondition_error("dense_oracle_attention: basis head_dim mismatch");
    }

    const std::int64_t l = batch.seq_len;
    const int D = batch.head_dim;
    const std::size_t half = basis.angles.size();

    // Distances are bounded by the matrix maximum, so precompute the
    // rotation coefficients for every -pe value once.
    const std::int64_t max_rel = pe.max_value();
    std::vector<RotationCoeffs> by_rel(static_cast<std::size_t>(max_rel) + 1);
    for (std::int64_t r = 0; r <= max_rel; ++r) {
        by_rel[static_cast<std::size_t>(r)] = rotation_coeffs(-r, basis);
    }

    DenseAttentionResult result;
    result.output.assign(batch.q.size(), 0.0);
    result.lse.assign(static_cast<std::size_t>(batch.heads) * static_cast<std::size_t>(l), 0.0);

    parallel_for(static_cast<std::int64_t>(batch.heads) * l, [&](std::int64_t begin,
                                                                 std::int64_t end) {
        std::vector<double> rotated(static_cast<std::size_t>(D));
        std::vector<double> logits;
        for (std::int64_t task = begin; task < end; ++task) {
            const int h = static_cast<int>(task / l);
            const std::int64_t i = task % l;
            const auto q = batch.q_row(h, i);
            const std::int32_t* row = pe.row(i);

            logits.assign(static_cast<std::size_t>(i) + 1, 0.0);
            double max_logit = kNegInf;
            for (std::int64_t j = 0; j <= i; ++j) {
                const auto& coeffs = by_rel[static_cast<std::size_t>(row[j])];
                const auto k = batch.k_row(h, j);
                double dot = 0.0;
                for (std::size_t t = 0; t < half; ++t) {
                    const double c = coeffs.cos_v[t];
                    const double s = coeffs.sin_v[t];
                    const double k0 = k[2 * t] * c - k[2 * t + 1] * s;
                    const double k1 = k[2 * t] * s + k[2 * t + 1] * c;
                    dot += q[2 * t] * k0 + q[2 * t + 1] * k1;
                }
                const double logit = batch.scale * dot;
                logits[static_cast<std::size_t>(j)] = logit;
                if (logit > max_logit) max_logit = logit;
            }

            double denom = 0.0;
            for (std::int64_t j = 0; j <= i; ++j) {
                denom += std::exp(logits[static_cast<std::size_t>(j)] - max_logit);
            }
            const std::size_t out_off =
                (static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                 static_cast<std::size_t>(i)) * static_cast<std::size_t>(D);
            for (std::int64_t j = 0; j <= i; ++j) {
                const double w = std::exp(logits[static_cast<std::size_t>(j)] - max_logit) / denom;
                const auto vr = batch.v_row(h, j);
                for (int d = 0; d < D; ++d) {
                    result.output[out_off + static_cast<std::size_t>(d)] += w * vr[static_cast<std::size_t>(d)];
                }
            }
            result.lse[static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                       static_cast<std::size_t>(i)] = max_logit + std::log(denom);
        }
    });
    return result;
}

PartialAttention windowed_partial_attention(const AttentionBatch& batch,
                                            std::span<const std::int64_t> q_positions,
                                            std::span<const std::int64_t> k_positions,
                                            const PairFilter& filter, const RotaryBasis& basis,
                                            std::int64_t row_begin, std::int64_t row_end) {
    batch.validate();
    const std::int64_t l = batch.seq_len;
    if (static_cast<std::int64_t>(q_positions.size()) != l ||
        static_cast<std::int64_t>(k_positions.size()) != l) {
        throw precondition_error("windowed_partial_attention: position lists must have length l");
    }
    if (basis.head_dim != batch.head_dim) {
        throw precondition_error("windowed_partial_attention: basis head_dim mismatch");
    }
    if (row_begin < 0 || row_end > l || row_begin > row_end) {
        throw precondition_error("windowed_partial_attention: bad row range");
    }

    const int D = batch.head_dim;
    const int H = batch.heads;
    const std::size_t half = basis.angles.size();
    const std::size_t stride = static_cast<std::size_t>(D);

    // Rotate all queries and keys once by their assigned positions.
    std::vector<double> qrot(static_cast<std::size_t>(H) * static_cast<std::size_t>(l) * stride);
    std::vector<double> krot(qrot.size());
    parallel_for(l, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            const auto qc = rotation_coeffs(q_positions[static_cast<std::size_t>(i)], basis);
            const auto kc = rotation_coeffs(k_positions[static_cast<std::size_t>(i)], basis);
            for (int h = 0; h < H; ++h) {
                const std::size_t off = (static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                                         static_cast<std::size_t>(i)) * stride;
                apply_coeffs_into(batch.q_row(h, i), qc, {qrot.data() + off, stride});
                apply_coeffs_into(batch.k_row(h, i), kc, {krot.data() + off, stride});
            }
        }
    });

    PartialAttention part = make_empty_partial(H, D, row_begin, row_end);
    std::atomic<std::int64_t> visited_total{0};

    const std::int64_t rows = row_end - row_begin;
    parallel_for(static_cast<std::int64_t>(H) * rows, [&](std::int64_t begin, std::int64_t end) {
        std::vector<double> logits;
        std::vector<std::int64_t> visited;
        std::int64_t local_pairs = 0;
        for (std::int64_t task = begin; task < end; ++task) {
            const int h = static_cast<int>(task / rows);
            const std::int64_t i = row_begin + task % rows;

            logits.clear();
            visited.clear();
            const std::size_t qoff = (static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                                      static_cast<std::size_t>(i)) * stride;
            const double* qr = qrot.data() + qoff;
            double max_logit = kNegInf;
            for (std::int64_t j = 0; j <= i; ++j) {
                if (!filter(i, j)) continue;
                const std::size_t koff =
                    (static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                     static_cast<std::size_t>(j)) * stride;
                const double* kr = krot.data() + koff;
                double dot = 0.0;
                for (std::size_t t = 0; t < half; ++t) {
                    dot += qr[2 * t] * kr[2 * t] + qr[2 * t + 1] * kr[2 * t + 1];
                }
                const double logit = batch.scale * dot;
                visited.push_back(j);
                logits.push_back(logit);
                if (logit > max_logit) max_logit = logit;
            }
            if (h == 0) local_pairs += static_cast<std::int64_t>(visited.size());
            if (visited.empty()) continue;  // row stays -inf / zero

            double denom = 0.0;
            for (const double logit : logits) denom += std::exp(logit - max_logit);
            auto out = part.output_row(h, i);
            for (std::size_t t = 0; t < visited.size(); ++t) {
                const double w = std::exp(logits[t] - max_logit) / denom;
                const auto vr = batch.v_row(h, visited[t]);
                for (int d = 0; d < D; ++d) out[static_cast<std::size_t>(d)] += w * vr[static_cast<std::size_t>(d)];
            }
            part.lse_at(h, i) = max_logit + std::log(denom);
        }
        visited_total.fetch_add(local_pairs, std::memory_order_relaxed);
    });
    part.visited_pairs = visited_total.load();
    return part;
}

PartialAttention windowed_partial_attention(const AttentionBatch& batch,
                                            std::span<const std::int64_t> q_positions,
                                            std::span<const std::int64_t> k_positions,
                                            const PairFilter& filter, const RotaryBasis& basis) {
    return windowed_partial_attention(batch, q_positions, k_positions, filter, basis, 0,
                                      batch.seq_len);
}

void save_tensor(std::span<const double> data, int heads, std::int64_t seq_len, int head_dim,
                 const std::filesystem::path& path) {
    const std::size_t expected = static_cast<std::size_t>(heads) *
                                 static_cast<std::size_t>(seq_len) *
                                 static_cast<std::size_t>(head_dim);
    if (data.size() != expected) throw precondition_error("save_tensor: size does not match shape");

    std::ofstream out(path, std::ios::out | std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    static_assert(sizeof(double) == 8);
    // Raw doubles; this codebase only targets little-endian hosts.
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw io_error("write failed: " + path.string());

    nlohmann::json sidecar{{"H", heads}, {"l", seq_len}, {"D", head_dim}};
    std::ofstream meta(path.string() + ".json");
    if (!meta) throw io_error("cannot open for writing: " + path.string() + ".json");
    meta << sidecar.dump(2) << "\n";
}

LoadedTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream meta(path.string() + ".json");
    if (!meta) throw io_error("cannot open sidecar: " + path.string() + ".json");
    nlohmann::json sidecar;
    try {
        meta >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("tensor sidecar: ") + e.what());
    }
    LoadedTensor t;
    t.heads = sidecar.at("H").get<int>();
    t.seq_len = sidecar.at("l").get<std::int64_t>();
    t.head_dim = sidecar.at("D").get<int>();

    std::ifstream in(path, std::ios::in | std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    t.data.resize(static_cast<std::size_t>(t.heads) * static_cast<std::size_t>(t.seq_len) *
                  static_cast<std::size_t>(t.head_dim));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw parse_error("truncated tensor payload: " + path.string());
    return t;
}

}  // namespace lampe
