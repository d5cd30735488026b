#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/quantizer.hpp"

namespace msvq {

/// MSB-first bit packer.
class BitWriter {
public:
    /// Appends the low `count` bits of value (count <= 32), most significant first.
    void put(std::uint32_t value, unsigned count);
    /// Zero-pads to the next byte boundary.
    void align();

    std::uint64_t bit_count() const { return bits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take();

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bits_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

    /// Reads `count` bits (<= 32); throws CorruptionError with the bit offset on truncation.
    std::uint32_t get(unsigned count);
    bool bit();
    void align();

    std::uint64_t bit_position() const { return pos_; }
    std::size_t byte_position() const { return static_cast<std::size_t>((pos_ + 7) / 8); }
    std::uint64_t bits_left() const { return std::uint64_t{data_.size()} * 8 - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::uint64_t pos_ = 0;
};

inline constexpr unsigned kMaxCodeLength = 32;

/// Canonical prefix code defined entirely by its code lengths: symbols are
/// ordered by (length, symbol index) and numbered consecutively.
class HuffmanCode {
public:
    HuffmanCode() = default;
    /// Throws ConfigError if any length is outside [1, 32] or Kraft's sum exceeds 1.
    explicit HuffmanCode(std::vector<std::uint8_t> lengths);

    std::size_t size() const { return lengths_.size(); }
    unsigned length(std::size_t symbol) const { return lengths_[symbol]; }
    std::uint32_t code(std::size_t symbol) const { return codes_[symbol]; }
    const std::vector<std::uint8_t>& lengths() const { return lengths_; }
    unsigned max_length() const { return max_len_; }

    /// Σ 2^-len, exact for lengths <= 32.
    double kraft_sum() const;

    void write(BitWriter& out, std::uint32_t symbol) const;
    std::uint32_t read(BitReader& in) const;

private:
    std::vector<std::uint8_t> lengths_;
    std::vector<std::uint32_t> codes_;
    unsigned max_len_ = 0;
    // Canonical decode tables, indexed by length.
    std::vector<std::uint32_t> first_code_;
    std::vector<std::uint32_t> count_;
    std::vector<std::uint32_t> offset_;
    std::vector<std::uint32_t> sorted_;
};

/// Huffman code lengths for pmf, lengths capped at 32. Merge ties go to the
/// node created first (leaves by symbol index, then internal nodes in merge
/// order). K = 1 yields a single 1-bit code.
HuffmanCode build_code(std::span<const double> pmf);

struct CodeStats {
    /// Σ p_k len_k.
    double avg_length = 0.0;
    /// -Σ p_k log2 p_k.
    double entropy = 0.0;
};

CodeStats avg_bits(std::span<const double> pmf, const HuffmanCode& code);

/// Index occurrence counts under full-depth encoding, per (sub-vector, stage):
/// result[i * T_max + t][k].
std::vector<std::vector<std::uint64_t>> count_indices(const MsvqModel& model, const FeatureMatrix& data);

/// Smoothed codeword PMF of the codebook used by sub-vector i at stage t,
/// pooled over every sub-vector sharing it: floor((count + 1) / (n + K)).
std::vector<double> estimate_pmf(const MsvqModel& model, const FeatureMatrix& data, std::size_t sub_index,
                                 std::size_t stage);

/// Same PMF for every codebook at once, indexed like model.codebooks().
std::vector<std::vector<double>> estimate_pmfs(const MsvqModel& model, const FeatureMatrix& data);

/// Copy of model with Huffman code lengths built from estimate_pmfs().
MsvqModel with_entropy_codes(const MsvqModel& model, const FeatureMatrix& data);

/// Decoded canonical codes for every codebook of a model.
class CodeSet {
public:
    /// Throws StateError if the model has no entropy codes.
    explicit CodeSet(const MsvqModel& model);
    const HuffmanCode& at(std::size_t sub_index, std::size_t stage) const {
        return codes_[group_of_[sub_index] * t_max_ + stage];
    }

private:
    std::vector<HuffmanCode> codes_;
    std::vector<std::uint32_t> group_of_;
    std::size_t t_max_ = 0;
};

/// Appends the prefix codes of every index, sub-vector-major then stage order.
void encode_indices(const EncodedFeature& encoded, const CodeSet& codes, BitWriter& out);
/// Same, as a standalone zero-padded byte buffer.
std::vector<std::uint8_t> encode_indices(const EncodedFeature& encoded, const CodeSet& codes);

/// Inverse of encode_indices for the stage counts in plan.
std::vector<std::vector<std::uint32_t>> decode_indices(BitReader& in, const SelectionPlan& plan,
                                                       const CodeSet& codes);
std::vector<std::vector<std::uint32_t>> decode_indices(std::span<const std::uint8_t> buffer,
                                                       const SelectionPlan& plan, const CodeSet& codes);

} // namespace msvq
