#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "msvq/feature_matrix.hpp"

namespace msvq {

/// Per-coordinate sample mean and population (1/n) variance.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> variance;
    std::size_t sample_count = 0;
};

/// N x T_max matrix of quantization bit widths B_i^(t).
struct BitMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> values;

    BitMatrix() = default;
    BitMatrix(std::size_t r, std::size_t c, std::uint8_t fill = 0)
        : rows(r), cols(c), values(r * c, fill) {}

    std::uint8_t at(std::size_t i, std::size_t t) const { return values[i * cols + t]; }
    std::uint8_t& at(std::size_t i, std::size_t t) { return values[i * cols + t]; }
    std::span<const std::uint8_t> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

    bool operator==(const BitMatrix&) const = default;
};

/// Largest per-module bit width accepted (K = 2^16 codewords).
inline constexpr unsigned kMaxModuleBits = 16;
/// Largest stage count accepted.
inline constexpr std::size_t kMaxStages = 15;

/// Throws ConfigError unless every entry is in [1, kMaxModuleBits] and the
/// matrix is non-increasing along both sub-vector index and stage index.
void validate_bits(const BitMatrix& bits);

enum class AllocationPreset { type1, type2, type3, custom };

AllocationPreset parse_preset(std::string_view name);
std::string_view preset_name(AllocationPreset p);

struct Allocation {
    AllocationPreset preset = AllocationPreset::type3;
    BitMatrix custom; // used only for AllocationPreset::custom
};

/// Materializes a bit matrix.
///   type1: first N/2 rows (8, 7, 6, ...), last N/2 rows (6, 5, 4, ...)
///   type2: first N/2 rows all 7, last N/2 rows all 5
///   type3: every entry 6
///   custom: alloc.custom, validated
BitMatrix allocation_preset(const Allocation& alloc, std::size_t n_sub, std::size_t t_max);

inline BitMatrix allocation_preset(AllocationPreset p, std::size_t n_sub, std::size_t t_max) {
    return allocation_preset(Allocation{p, {}}, n_sub, t_max);
}

/// Variance-sorted partition of an M-vector into N sub-vectors of dimension D.
///
/// perm[p] is the original coordinate stored at layout position p; sub-vector
/// i owns positions [i*D, (i+1)*D). Sub-vectors are grouped in contiguous runs
/// of N/G, and every member of a group shares one bits row.
struct SubVectorLayout {
    std::size_t m_dim = 0;
    std::size_t sub_dim = 0;
    std::size_t n_sub = 0;
    std::size_t n_groups = 0;
    std::size_t t_max = 0;
    std::vector<std::uint32_t> perm;
    std::vector<std::uint32_t> group_of;
    BitMatrix bits;

    unsigned bits_at(std::size_t i, std::size_t t) const { return bits.at(i, t); }
    std::size_t codebook_size(std::size_t i, std::size_t t) const { return std::size_t{1} << bits.at(i, t); }

    /// Σ_i Σ_t B_i^(t): bits spent when every stage is active.
    std::uint64_t total_bits() const;

    std::vector<std::uint32_t> inverse_perm() const;

    /// Copies z (original order) into layout order.
    void gather(std::span<const float> z, std::span<double> out) const;
    /// Writes layout-ordered values back to original coordinate order.
    void scatter(std::span<const double> in, std::span<double> z) const;

    /// Checks every structural invariant; throws ConfigError on violation.
    void validate() const;

    bool operator==(const SubVectorLayout&) const = default;
};

FeatureStats compute_stats(const FeatureMatrix& data);

SubVectorLayout build_layout(const FeatureStats& stats, std::size_t sub_dim, std::size_t t_max,
                             std::size_t groups, const Allocation& alloc);

} // namespace msvq
