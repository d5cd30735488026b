#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace msvq {

/// Smallest probability any codeword prior may hold (2^-32), so -log2 p is finite.
inline constexpr double kPriorFloor = 1.0 / 4294967296.0;

/// Maps a non-negative weight vector onto the simplex with every entry >= kPriorFloor.
std::vector<double> floor_and_normalize(std::span<const double> weights);

/// One stage codebook: K = 2^bits codewords of dimension D plus a codeword
/// prior and, once built, canonical Huffman code lengths.
class Codebook {
public:
    Codebook() = default;
    /// An empty prior means uniform.
    Codebook(std::size_t dim, unsigned bits, std::vector<float> vectors,
             std::vector<double> prior = {}, std::vector<std::uint8_t> code_lengths = {});

    std::size_t dim() const { return dim_; }
    unsigned bits() const { return bits_; }
    std::size_t size() const { return std::size_t{1} << bits_; }

    std::span<const float> codeword(std::size_t k) const { return {vectors_.data() + k * dim_, dim_}; }
    const std::vector<float>& vectors() const { return vectors_; }
    const std::vector<double>& prior() const { return prior_; }
    const std::vector<std::uint8_t>& code_lengths() const { return code_lengths_; }
    bool has_code() const { return !code_lengths_.empty(); }

    /// -log2 prior[k]; meaningful only when prior_valid().
    double rate_bits(std::size_t k) const { return rate_[k]; }
    bool prior_valid() const { return prior_valid_; }

    Codebook with_code_lengths(std::vector<std::uint8_t> lengths) const;

    /// Full invariant check (finite vectors, prior on the simplex within 1e-9
    /// with positive entries, Kraft inequality). Throws CorruptionError.
    void validate() const;

    bool operator==(const Codebook& o) const {
        return dim_ == o.dim_ && bits_ == o.bits_ && vectors_ == o.vectors_ && prior_ == o.prior_ &&
               code_lengths_ == o.code_lengths_;
    }

private:
    std::size_t dim_ = 0;
    unsigned bits_ = 0;
    std::vector<float> vectors_;
    std::vector<double> prior_;
    std::vector<std::uint8_t> code_lengths_;
    std::vector<double> rate_;
    bool prior_valid_ = false;
};

struct Match {
    std::uint32_t index = 0;
    double distortion = 0.0;
};

struct RateMatch {
    std::uint32_t index = 0;
    double distortion = 0.0;
    double rate_bits = 0.0;
};

/// Squared Euclidean distance between a residual and a codeword.
inline double squared_distance(std::span<const double> r, std::span<const float> c) {
    double d = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double e = r[j] - static_cast<double>(c[j]);
        d += e * e;
    }
    return d;
}

/// Exhaustive nearest codeword; ties go to the lowest index.
Match nearest(const Codebook& codebook, std::span<const double> r);

/// argmin_k lambda * ||r - c_k||^2 - log2 p_k; ties go to the lowest index.
/// Throws CorruptionError if the prior has a non-positive entry.
RateMatch nearest_rate_penalized(const Codebook& codebook, std::span<const double> r, double lambda);

} // namespace msvq
