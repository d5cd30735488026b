#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msvq/codebook.hpp"
#include "msvq/layout.hpp"

namespace msvq {

/// Trained multi-stage codec. Immutable: every modification returns a copy.
///
/// Codebooks are stored per (group, stage), so sub-vectors that share a group
/// resolve to the same codebook at each stage.
class MsvqModel {
public:
    MsvqModel() = default;

    /// codebooks are indexed [g * t_max + t]. fallback_means holds the N x D
    /// layout-ordered training mean used when a sub-vector gets zero stages.
    /// lambda holds one positive weight per stage (ignored unless ec).
    MsvqModel(SubVectorLayout layout, std::vector<Codebook> codebooks, std::vector<float> fallback_means,
              bool ec, std::vector<double> lambda, bool strict = false, std::uint64_t table_digest = 0);

    const SubVectorLayout& layout() const { return layout_; }
    std::size_t t_max() const { return layout_.t_max; }
    std::size_t n_sub() const { return layout_.n_sub; }
    std::size_t sub_dim() const { return layout_.sub_dim; }
    bool ec_enabled() const { return ec_; }
    bool strict_default() const { return strict_; }
    double lambda(std::size_t t) const { return lambda_[t]; }
    const std::vector<double>& lambdas() const { return lambda_; }
    std::uint64_t table_digest() const { return table_digest_; }

    const Codebook& codebook(std::size_t group, std::size_t stage) const {
        return codebooks_[group * layout_.t_max + stage];
    }
    const std::vector<Codebook>& codebooks() const { return codebooks_; }

    /// Codebook used by sub-vector i at stage t; throws IndexError out of range.
    const Codebook& resolve(std::size_t i, std::size_t t) const;

    std::span<const float> fallback_mean(std::size_t i) const {
        return {fallback_means_.data() + i * layout_.sub_dim, layout_.sub_dim};
    }
    const std::vector<float>& fallback_means() const { return fallback_means_; }

    /// True when every codebook carries Huffman code lengths.
    bool has_entropy_codes() const;

    /// Number of stored codeword scalars, counted from the codebooks themselves.
    std::size_t codeword_parameter_count() const;

    MsvqModel with_table_digest(std::uint64_t digest) const;
    /// lengths indexed like codebooks().
    MsvqModel with_code_lengths(std::vector<std::vector<std::uint8_t>> lengths) const;

    bool operator==(const MsvqModel&) const = default;

private:
    SubVectorLayout layout_;
    std::vector<Codebook> codebooks_;
    std::vector<float> fallback_means_;
    bool ec_ = false;
    std::vector<double> lambda_;
    bool strict_ = false;
    std::uint64_t table_digest_ = 0;
};

inline const Codebook& resolve(const MsvqModel& model, std::size_t i, std::size_t t) {
    return model.resolve(i, t);
}

} // namespace msvq
