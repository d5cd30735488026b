#include "msvq/model.hpp"

#include <cmath>
#include <string>

#include "msvq/error.hpp"

namespace msvq {

MsvqModel::MsvqModel(SubVectorLayout layout, std::vector<Codebook> codebooks,
                     std::vector<float> fallback_means, bool ec, std::vector<double> lambda, bool strict,
                     std::uint64_t table_digest)
    : layout_(std::move(layout)), codebooks_(std::move(codebooks)),
      fallback_means_(std::move(fallback_means)), ec_(ec), lambda_(std::move(lambda)), strict_(strict),
      table_digest_(table_digest) {
    layout_.validate();
    const std::size_t g_count = layout_.n_groups;
    const std::size_t t_max = layout_.t_max;
    if (codebooks_.size() != g_count * t_max)
        throw CorruptionError("model: expected " + std::to_string(g_count * t_max) + " codebooks, got " +
                              std::to_string(codebooks_.size()));
    if (fallback_means_.size() != layout_.m_dim) throw CorruptionError("model: fallback mean block size mismatch");
    for (float v : fallback_means_)
        if (!std::isfinite(v)) throw CorruptionError("model: non-finite fallback mean");
    if (lambda_.size() != t_max) throw CorruptionError("model: need one lambda per stage");
    for (double l : lambda_)
        if (!(l > 0.0) || !std::isfinite(l)) throw CorruptionError("model: lambda must be positive and finite");

    for (std::size_t i = 0; i < layout_.n_sub; ++i) {
        for (std::size_t t = 0; t < t_max; ++t) {
            const Codebook& cb = codebook(layout_.group_of[i], t);
            if (cb.bits() != layout_.bits_at(i, t) || cb.dim() != layout_.sub_dim)
                throw CorruptionError("model: codebook for group " + std::to_string(layout_.group_of[i]) +
                                      ", stage " + std::to_string(t) + " does not match the layout");
        }
    }
    for (const auto& cb : codebooks_) cb.validate();
}

const Codebook& MsvqModel::resolve(std::size_t i, std::size_t t) const {
    if (i >= layout_.n_sub || t >= layout_.t_max)
        throw IndexError("resolve: (sub-vector " + std::to_string(i) + ", stage " + std::to_string(t) +
                         ") outside N=" + std::to_string(layout_.n_sub) +
                         ", T_max=" + std::to_string(layout_.t_max));
    return codebook(layout_.group_of[i], t);
}

bool MsvqModel::has_entropy_codes() const {
    for (const auto& cb : codebooks_)
        if (!cb.has_code()) return false;
    return !codebooks_.empty();
}

std::size_t MsvqModel::codeword_parameter_count() const {
    std::size_t n = 0;
    for (const auto& cb : codebooks_) n += cb.vectors().size();
    return n;
}

MsvqModel MsvqModel::with_table_digest(std::uint64_t digest) const {
    MsvqModel copy = *this;
    copy.table_digest_ = digest;
    return copy;
}

MsvqModel MsvqModel::with_code_lengths(std::vector<std::vector<std::uint8_t>> lengths) const {
    if (lengths.size() != codebooks_.size()) throw ConfigError("code length tables: one per codebook required");
    MsvqModel copy = *this;
    for (std::size_t k = 0; k < codebooks_.size(); ++k) {
        copy.codebooks_[k] = codebooks_[k].with_code_lengths(std::move(lengths[k]));
        copy.codebooks_[k].validate();
    }
    return copy;
}

} // namespace msvq
