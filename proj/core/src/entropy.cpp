#include "msvq/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

#include "msvq/error.hpp"
#include "msvq/parallel.hpp"

namespace msvq {

void BitWriter::put(std::uint32_t value, unsigned count) {
    for (unsigned b = count; b-- > 0;) {
        if (bits_ % 8 == 0) bytes_.push_back(0);
        if ((value >> b) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
        ++bits_;
    }
}

void BitWriter::align() { bits_ = std::uint64_t{bytes_.size()} * 8; }

std::vector<std::uint8_t> BitWriter::take() {
    bits_ = 0;
    return std::move(bytes_);
}

bool BitReader::bit() {
    if (pos_ >= std::uint64_t{data_.size()} * 8)
        throw CorruptionError("bitstream truncated at bit offset " + std::to_string(pos_));
    const bool b = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return b;
}

std::uint32_t BitReader::get(unsigned count) {
    if (count > bits_left())
        throw CorruptionError("bitstream truncated at bit offset " + std::to_string(pos_) + " (need " +
                              std::to_string(count) + " bits)");
    std::uint32_t v = 0;
    for (unsigned b = 0; b < count; ++b) v = (v << 1) | static_cast<std::uint32_t>(bit());
    return v;
}

void BitReader::align() { pos_ = (pos_ + 7) / 8 * 8; }

HuffmanCode::HuffmanCode(std::vector<std::uint8_t> lengths) : lengths_(std::move(lengths)) {
    if (lengths_.empty()) throw ConfigError("huffman: empty code");
    std::uint64_t kraft = 0; // units of 2^-32
    for (auto len : lengths_) {
        if (len < 1 || len > kMaxCodeLength)
            throw ConfigError("huffman: code length " + std::to_string(len) + " outside [1, 32]");
        kraft += std::uint64_t{1} << (kMaxCodeLength - len);
        max_len_ = std::max<unsigned>(max_len_, len);
    }
    if (kraft > (std::uint64_t{1} << kMaxCodeLength)) throw ConfigError("huffman: lengths violate Kraft inequality");

    const std::size_t k = lengths_.size();
    sorted_.resize(k);
    std::iota(sorted_.begin(), sorted_.end(), 0u);
    std::stable_sort(sorted_.begin(), sorted_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return lengths_[a] < lengths_[b]; });
    first_code_.assign(max_len_ + 2, 0);
    count_.assign(max_len_ + 2, 0);
    offset_.assign(max_len_ + 2, 0);
    for (auto len : lengths_) ++count_[len];
    codes_.resize(k);
    std::uint64_t code = 0;
    std::uint32_t off = 0;
    for (unsigned len = 1; len <= max_len_; ++len) {
        first_code_[len] = static_cast<std::uint32_t>(code);
        offset_[len] = off;
        code += count_[len];
        off += count_[len];
        code <<= 1;
    }
    for (std::size_t s = 0; s < k; ++s) {
        const auto sym = sorted_[s];
        const unsigned len = lengths_[sym];
        codes_[sym] = first_code_[len] + static_cast<std::uint32_t>(s - offset_[len]);
    }
}

double HuffmanCode::kraft_sum() const {
    double s = 0.0;
    for (auto len : lengths_) s += std::ldexp(1.0, -static_cast<int>(len));
    return s;
}

void HuffmanCode::write(BitWriter& out, std::uint32_t symbol) const {
    if (symbol >= lengths_.size())
        throw IndexError("huffman: symbol " + std::to_string(symbol) + " outside alphabet of " +
                         std::to_string(lengths_.size()));
    out.put(codes_[symbol], lengths_[symbol]);
}

std::uint32_t HuffmanCode::read(BitReader& in) const {
    const std::uint64_t start = in.bit_position();
    std::uint32_t code = 0;
    for (unsigned len = 1; len <= max_len_; ++len) {
        code = (code << 1) | static_cast<std::uint32_t>(in.bit());
        const std::uint32_t rel = code - first_code_[len];
        if (code >= first_code_[len] && rel < count_[len]) return sorted_[offset_[len] + rel];
    }
    throw CorruptionError("invalid prefix code at bit offset " + std::to_string(start));
}

namespace {

// Pushes lengths down to kMaxCodeLength while keeping the code complete.
void limit_lengths(std::vector<std::uint8_t>& len, std::span<const double> pmf) {
    constexpr unsigned L = kMaxCodeLength;
    const std::uint64_t full = std::uint64_t{1} << L;
    for (auto& l : len) l = static_cast<std::uint8_t>(std::min<unsigned>(l, L));
    auto kraft = [&] {
        std::uint64_t s = 0;
        for (auto l : len) s += std::uint64_t{1} << (L - l);
        return s;
    };
    std::vector<std::size_t> by_prob(len.size());
    std::iota(by_prob.begin(), by_prob.end(), std::size_t{0});
    std::stable_sort(by_prob.begin(), by_prob.end(), [&](auto a, auto b) { return pmf[a] > pmf[b]; });

    // Lengthen the least probable codes still below the cap until Kraft holds.
    std::uint64_t s = kraft();
    while (s > full) {
        for (auto it = by_prob.rbegin(); it != by_prob.rend() && s > full; ++it) {
            if (len[*it] < L) {
                s -= std::uint64_t{1} << (L - len[*it] - 1);
                ++len[*it];
            }
        }
    }
    // Spend any slack on the most probable codes.
    bool changed = true;
    while (s < full && changed) {
        changed = false;
        for (auto sym : by_prob) {
            if (len[sym] > 1 && s + (std::uint64_t{1} << (L - len[sym])) <= full) {
                s += std::uint64_t{1} << (L - len[sym]);
                --len[sym];
                changed = true;
                if (s == full) break;
            }
        }
    }
}

} // namespace

HuffmanCode build_code(std::span<const double> pmf) {
    const std::size_t k = pmf.size();
    if (k == 0) throw ConfigError("build_code: empty pmf");
    for (double p : pmf)
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("build_code: pmf entries must be finite and >= 0");
    if (k == 1) return HuffmanCode({1});

    using Node = std::tuple<double, std::size_t>; // (weight, creation id)
    std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
    for (std::size_t s = 0; s < k; ++s) heap.emplace(pmf[s], s);
    std::vector<std::size_t> parent(2 * k - 1, 0);
    std::size_t next = k;
    while (heap.size() > 1) {
        const auto [wa, a] = heap.top();
        heap.pop();
        const auto [wb, b] = heap.top();
        heap.pop();
        parent[a] = next;
        parent[b] = next;
        heap.emplace(wa + wb, next++);
    }
    const std::size_t root = next - 1;
    std::vector<unsigned> depth(2 * k - 1, 0);
    for (std::size_t node = root; node-- > 0;) depth[node] = depth[parent[node]] + 1;

    std::vector<std::uint8_t> lengths(k);
    unsigned longest = 0;
    for (std::size_t s = 0; s < k; ++s) {
        longest = std::max(longest, depth[s]);
        lengths[s] = static_cast<std::uint8_t>(std::min<unsigned>(depth[s], 255));
    }
    if (longest > kMaxCodeLength) limit_lengths(lengths, pmf);
    return HuffmanCode(std::move(lengths));
}

CodeStats avg_bits(std::span<const double> pmf, const HuffmanCode& code) {
    if (pmf.size() != code.size()) throw ConfigError("avg_bits: pmf and code sizes differ");
    CodeStats s;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        s.avg_length += pmf[k] * code.length(k);
        if (pmf[k] > 0.0) s.entropy -= pmf[k] * std::log2(pmf[k]);
    }
    return s;
}

std::vector<std::vector<std::uint64_t>> count_indices(const MsvqModel& model, const FeatureMatrix& data) {
    const auto& layout = model.layout();
    if (data.cols() != layout.m_dim) throw DataError("count_indices: data width does not match the model");
    const std::size_t n_mod = layout.n_sub * layout.t_max;
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = parallel::chunk_count(data.rows(), kChunk);
    std::vector<std::vector<std::vector<std::uint64_t>>> partial(chunks);
    parallel::for_chunks(data.rows(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        auto& counts = partial[c];
        counts.resize(n_mod);
        for (std::size_t i = 0; i < layout.n_sub; ++i)
            for (std::size_t t = 0; t < layout.t_max; ++t) counts[i * layout.t_max + t].assign(layout.codebook_size(i, t), 0);
        std::vector<std::uint32_t> idx(n_mod);
        for (std::size_t r = b; r < e; ++r) {
            full_indices(model, data.row(r), idx);
            for (std::size_t q = 0; q < n_mod; ++q) ++counts[q][idx[q]];
        }
    });
    std::vector<std::vector<std::uint64_t>> total(n_mod);
    for (std::size_t i = 0; i < layout.n_sub; ++i)
        for (std::size_t t = 0; t < layout.t_max; ++t) total[i * layout.t_max + t].assign(layout.codebook_size(i, t), 0);
    for (const auto& counts : partial)
        for (std::size_t q = 0; q < n_mod; ++q)
            for (std::size_t k = 0; k < counts[q].size(); ++k) total[q][k] += counts[q][k];
    return total;
}

namespace {

std::vector<std::vector<double>> pmfs_from_counts(const MsvqModel& model,
                                                  const std::vector<std::vector<std::uint64_t>>& counts) {
    const auto& layout = model.layout();
    std::vector<std::vector<double>> pooled(model.codebooks().size());
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        for (std::size_t t = 0; t < layout.t_max; ++t) {
            auto& acc = pooled[layout.group_of[i] * layout.t_max + t];
            const auto& c = counts[i * layout.t_max + t];
            if (acc.empty()) acc.assign(c.size(), 1.0); // Laplace +1
            for (std::size_t k = 0; k < c.size(); ++k) acc[k] += static_cast<double>(c[k]);
        }
    }
    for (auto& w : pooled) w = floor_and_normalize(w);
    return pooled;
}

} // namespace

std::vector<std::vector<double>> estimate_pmfs(const MsvqModel& model, const FeatureMatrix& data) {
    return pmfs_from_counts(model, count_indices(model, data));
}

std::vector<double> estimate_pmf(const MsvqModel& model, const FeatureMatrix& data, std::size_t sub_index,
                                 std::size_t stage) {
    model.resolve(sub_index, stage);
    const auto all = estimate_pmfs(model, data);
    return all[model.layout().group_of[sub_index] * model.t_max() + stage];
}

MsvqModel with_entropy_codes(const MsvqModel& model, const FeatureMatrix& data) {
    const auto pmfs = estimate_pmfs(model, data);
    std::vector<std::vector<std::uint8_t>> lengths;
    lengths.reserve(pmfs.size());
    for (const auto& p : pmfs) lengths.push_back(build_code(p).lengths());
    return model.with_code_lengths(std::move(lengths));
}

CodeSet::CodeSet(const MsvqModel& model) : group_of_(model.layout().group_of), t_max_(model.t_max()) {
    if (!model.has_entropy_codes()) throw StateError("model has no entropy codes");
    codes_.reserve(model.codebooks().size());
    for (const auto& cb : model.codebooks()) codes_.emplace_back(cb.code_lengths());
}

void encode_indices(const EncodedFeature& encoded, const CodeSet& codes, BitWriter& out) {
    for (std::size_t i = 0; i < encoded.indices.size(); ++i)
        for (std::size_t t = 0; t < encoded.indices[i].size(); ++t) codes.at(i, t).write(out, encoded.indices[i][t]);
}

std::vector<std::uint8_t> encode_indices(const EncodedFeature& encoded, const CodeSet& codes) {
    BitWriter w;
    encode_indices(encoded, codes, w);
    w.align();
    return w.take();
}

std::vector<std::vector<std::uint32_t>> decode_indices(BitReader& in, const SelectionPlan& plan,
                                                       const CodeSet& codes) {
    std::vector<std::vector<std::uint32_t>> out(plan.stages.size());
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        out[i].reserve(plan.stages[i]);
        for (std::size_t t = 0; t < plan.stages[i]; ++t) out[i].push_back(codes.at(i, t).read(in));
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> decode_indices(std::span<const std::uint8_t> buffer,
                                                       const SelectionPlan& plan, const CodeSet& codes) {
    BitReader in(buffer);
    return decode_indices(in, plan, codes);
}

} // namespace msvq
