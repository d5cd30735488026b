#include "msvq/layout.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "msvq/error.hpp"

namespace msvq {

void validate_bits(const BitMatrix& bits) {
    if (bits.rows == 0 || bits.cols == 0 || bits.values.size() != bits.rows * bits.cols)
        throw ConfigError("bit matrix: empty or inconsistent shape");
    for (std::size_t i = 0; i < bits.rows; ++i) {
        for (std::size_t t = 0; t < bits.cols; ++t) {
            const unsigned b = bits.at(i, t);
            if (b < 1 || b > kMaxModuleBits)
                throw ConfigError("bit matrix: entry (" + std::to_string(i) + ", " +
                                  std::to_string(t) + ") = " + std::to_string(b) +
                                  " outside [1, " + std::to_string(kMaxModuleBits) + "]");
            if (t > 0 && b > bits.at(i, t - 1))
                throw ConfigError("bit matrix: row " + std::to_string(i) +
                                  " increases from stage " + std::to_string(t - 1) + " to " +
                                  std::to_string(t));
            if (i > 0 && b > bits.at(i - 1, t))
                throw ConfigError("bit matrix: stage " + std::to_string(t) +
                                  " increases from sub-vector " + std::to_string(i - 1) +
                                  " to " + std::to_string(i));
        }
    }
}

AllocationPreset parse_preset(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "type1" || s == "typei") return AllocationPreset::type1;
    if (s == "type2" || s == "typeii") return AllocationPreset::type2;
    if (s == "type3" || s == "typeiii") return AllocationPreset::type3;
    if (s == "custom" || s == "file") return AllocationPreset::custom;
    throw ConfigError("unknown allocation preset '" + std::string(name) + "'");
}

std::string_view preset_name(AllocationPreset p) {
    switch (p) {
        case AllocationPreset::type1: return "type1";
        case AllocationPreset::type2: return "type2";
        case AllocationPreset::type3: return "type3";
        case AllocationPreset::custom: return "custom";
    }
    return "?";
}

BitMatrix allocation_preset(const Allocation& alloc, std::size_t n_sub, std::size_t t_max) {
    if (n_sub == 0 || t_max == 0 || t_max > kMaxStages)
        throw ConfigError("allocation: need N >= 1 and 1 <= T_max <= " + std::to_string(kMaxStages));

    BitMatrix bits(n_sub, t_max);
    const auto two_tier = [&](auto high, auto low) {
        if (n_sub % 2 != 0)
            throw ConfigError("allocation " + std::string(preset_name(alloc.preset)) +
                              " splits sub-vectors in halves and needs an even N (got " +
                              std::to_string(n_sub) + ")");
        for (std::size_t i = 0; i < n_sub; ++i)
            for (std::size_t t = 0; t < t_max; ++t)
                bits.at(i, t) = static_cast<std::uint8_t>(i < n_sub / 2 ? high(t) : low(t));
    };

    switch (alloc.preset) {
        case AllocationPreset::type1:
            if (t_max > 6) throw ConfigError("allocation type1 defined for T_max <= 6");
            two_tier([](std::size_t t) { return 8 - t; }, [](std::size_t t) { return 6 - t; });
            break;
        case AllocationPreset::type2:
            two_tier([](std::size_t) { return 7; }, [](std::size_t) { return 5; });
            break;
        case AllocationPreset::type3:
            std::fill(bits.values.begin(), bits.values.end(), std::uint8_t{6});
            break;
        case AllocationPreset::custom:
            if (alloc.custom.rows != n_sub || alloc.custom.cols != t_max)
                throw ConfigError("custom allocation is " + std::to_string(alloc.custom.rows) + "x" +
                                  std::to_string(alloc.custom.cols) + ", layout needs " +
                                  std::to_string(n_sub) + "x" + std::to_string(t_max));
            bits = alloc.custom;
            break;
    }
    validate_bits(bits);
    return bits;
}

std::uint64_t SubVectorLayout::total_bits() const {
    return std::accumulate(bits.values.begin(), bits.values.end(), std::uint64_t{0});
}

std::vector<std::uint32_t> SubVectorLayout::inverse_perm() const {
    std::vector<std::uint32_t> inv(perm.size());
    for (std::size_t p = 0; p < perm.size(); ++p) inv[perm[p]] = static_cast<std::uint32_t>(p);
    return inv;
}

void SubVectorLayout::gather(std::span<const float> z, std::span<double> out) const {
    for (std::size_t p = 0; p < m_dim; ++p) out[p] = z[perm[p]];
}

void SubVectorLayout::scatter(std::span<const double> in, std::span<double> z) const {
    for (std::size_t p = 0; p < m_dim; ++p) z[perm[p]] = in[p];
}

void SubVectorLayout::validate() const {
    if (sub_dim == 0 || n_sub == 0 || m_dim != n_sub * sub_dim)
        throw ConfigError("layout: M must equal N*D");
    if (t_max == 0 || t_max > kMaxStages) throw ConfigError("layout: bad T_max");
    if (n_groups == 0 || n_groups > n_sub || n_sub % n_groups != 0)
        throw ConfigError("layout: G must divide N");
    if (perm.size() != m_dim) throw ConfigError("layout: permutation has wrong length");
    std::vector<bool> seen(m_dim, false);
    for (auto p : perm) {
        if (p >= m_dim || seen[p]) throw ConfigError("layout: perm is not a bijection");
        seen[p] = true;
    }
    if (group_of.size() != n_sub) throw ConfigError("layout: group_of has wrong length");
    for (auto g : group_of)
        if (g >= n_groups) throw ConfigError("layout: group id out of range");
    if (bits.rows != n_sub || bits.cols != t_max) throw ConfigError("layout: bits shape mismatch");
    validate_bits(bits);
    std::vector<std::ptrdiff_t> first_member(n_groups, -1);
    for (std::size_t i = 0; i < n_sub; ++i) {
        auto& f = first_member[group_of[i]];
        if (f < 0) {
            f = static_cast<std::ptrdiff_t>(i);
        } else if (!std::equal(bits.row(i).begin(), bits.row(i).end(),
                               bits.row(static_cast<std::size_t>(f)).begin())) {
            throw ConfigError("layout: sub-vectors " + std::to_string(f) + " and " +
                              std::to_string(i) + " share group " + std::to_string(group_of[i]) +
                              " but have different bit rows");
        }
    }
}

FeatureStats compute_stats(const FeatureMatrix& data) {
    if (data.rows() < 2)
        throw DataError("statistics need at least 2 rows, got " + std::to_string(data.rows()));
    data.require_finite();
    const std::size_t n = data.rows();
    const std::size_t m = data.cols();
    FeatureStats s;
    s.sample_count = n;
    s.mean.assign(m, 0.0);
    s.variance.assign(m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) s.mean[c] += data(r, c);
    for (auto& v : s.mean) v /= static_cast<double>(n);
    // Two-pass form keeps constant columns exactly zero.
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            const double d = data(r, c) - s.mean[c];
            s.variance[c] += d * d;
        }
    for (auto& v : s.variance) v /= static_cast<double>(n);
    return s;
}

SubVectorLayout build_layout(const FeatureStats& stats, std::size_t sub_dim, std::size_t t_max,
                             std::size_t groups, const Allocation& alloc) {
    const std::size_t m = stats.variance.size();
    if (sub_dim == 0 || m == 0 || m % sub_dim != 0)
        throw ConfigError("layout: M = " + std::to_string(m) + " is not divisible by D = " +
                          std::to_string(sub_dim));
    const std::size_t n = m / sub_dim;
    if (groups < 1 || groups > n || n % groups != 0)
        throw ConfigError("layout: G = " + std::to_string(groups) + " must divide N = " +
                          std::to_string(n));

    SubVectorLayout layout;
    layout.m_dim = m;
    layout.sub_dim = sub_dim;
    layout.n_sub = n;
    layout.n_groups = groups;
    layout.t_max = t_max;
    layout.perm.resize(m);
    std::iota(layout.perm.begin(), layout.perm.end(), 0u);
    std::stable_sort(layout.perm.begin(), layout.perm.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return stats.variance[a] > stats.variance[b]; });
    const std::size_t per_group = n / groups;
    layout.group_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) layout.group_of[i] = static_cast<std::uint32_t>(i / per_group);
    layout.bits = allocation_preset(alloc, n, t_max);
    layout.validate();
    return layout;
}

} // namespace msvq
