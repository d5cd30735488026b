#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msvq/model.hpp"

namespace msvq {

/// Active stage count per sub-vector plus its bit accounting.
struct SelectionPlan {
    std::vector<std::uint8_t> stages;
    /// Σ_i Σ_{t < T_i} B_i^(t).
    std::uint64_t exact_bits = 0;
    /// Budgeted bits under the table's step costs (average code length in EC mode).
    double avg_bits = 0.0;
    /// Sub-vector incremented at each greedy step, in order. Empty for hand-built plans.
    std::vector<std::uint32_t> order;

    std::size_t active_modules() const;
    bool operator==(const SelectionPlan&) const = default;
};

/// Plan with exact_bits (and avg_bits) computed from the layout.
SelectionPlan make_plan(const SubVectorLayout& layout, std::vector<std::uint8_t> stages);

/// Every sub-vector at full depth.
SelectionPlan full_plan(const SubVectorLayout& layout);

/// Throws ConfigError if the plan does not fit the layout and CorruptionError
/// if exact_bits disagrees with the layout.
void validate_plan(const SubVectorLayout& layout, const SelectionPlan& plan);

struct EncodedFeature {
    /// indices[i] holds one codeword index per active stage of sub-vector i.
    std::vector<std::vector<std::uint32_t>> indices;
    SelectionPlan plan;

    bool operator==(const EncodedFeature&) const = default;
};

struct EncodeResult {
    EncodedFeature encoded;
    std::vector<double> z_hat;
};

/// Quantizes z stage by stage, stopping sub-vector i after plan.stages[i]
/// stages. EC models pick codewords with the rate-penalized rule.
EncodeResult encode(const MsvqModel& model, std::span<const float> z, const SelectionPlan& plan);

/// Rebuilds the reconstruction from indices. Bit-identical to encode().z_hat.
std::vector<double> decode(const MsvqModel& model, const EncodedFeature& encoded);

/// Per sub-vector squared error ||z_i - ẑ_i^(T)||^2 for every T = 0..T_max,
/// written to out[i * (T_max + 1) + T]. Uses the same reconstruction arithmetic
/// as encode().
void truncation_errors(const MsvqModel& model, std::span<const float> z, std::span<double> out);

/// Codeword indices of every stage for every sub-vector (full depth), [i * T_max + t].
void full_indices(const MsvqModel& model, std::span<const float> z, std::span<std::uint32_t> out);

double squared_error(std::span<const float> z, std::span<const double> z_hat);

} // namespace msvq
