#include <gtest/gtest.h>

#include <random>

#include "msvq/error.hpp"
#include "msvq/layout.hpp"
#include "msvq/synth.hpp"

using namespace msvq;

namespace {

FeatureStats stats_from_variance(std::vector<double> v) {
    FeatureStats s;
    s.mean.assign(v.size(), 0.0);
    s.variance = std::move(v);
    s.sample_count = 10;
    return s;
}

std::vector<std::uint8_t> row_of(const BitMatrix& b, std::size_t i) { return {b.row(i).begin(), b.row(i).end()}; }

} // namespace

TEST(ComputeStats, TwoPointSample) {
    FeatureMatrix m(2, 2, {0.f, 0.f, 2.f, 0.f});
    const auto s = compute_stats(m);
    EXPECT_EQ(s.mean, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(s.variance, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(s.sample_count, 2u);
}

TEST(ComputeStats, ConstantDataHasZeroVariance) {
    FeatureMatrix m(5, 3, std::vector<float>(15, 3.25f));
    for (double v : compute_stats(m).variance) EXPECT_EQ(v, 0.0);
}

TEST(ComputeStats, StandardNormalVarianceMatchesDirectFormula) {
    const auto m = synth::gauss_iid(1000, 16, 11);
    const auto s = compute_stats(m);
    for (std::size_t c = 0; c < 16; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < 1000; ++r) mean += m(r, c);
        mean /= 1000.0;
        double var = 0.0;
        for (std::size_t r = 0; r < 1000; ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
        var /= 1000.0;
        EXPECT_NEAR(s.variance[c], var, 1e-12);
        EXPECT_GE(s.variance[c], 0.8);
        EXPECT_LE(s.variance[c], 1.2);
    }
}

TEST(ComputeStats, Errors) {
    EXPECT_THROW(compute_stats(FeatureMatrix(1, 4)), DataError);
    FeatureMatrix bad(3, 2);
    bad(1, 1) = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(compute_stats(bad), DataError);
}

TEST(BuildLayout, SortsByDescendingVariance) {
    const auto l = build_layout(stats_from_variance({5, 1, 9, 3}), 2, 1, 2, {AllocationPreset::type3, {}});
    EXPECT_EQ(l.perm, (std::vector<std::uint32_t>{2, 0, 3, 1}));
    EXPECT_EQ(l.n_sub, 2u);
}

TEST(BuildLayout, EqualVariancesKeepIdentity) {
    const auto l = build_layout(stats_from_variance(std::vector<double>(12, 2.0)), 3, 2, 4, {});
    for (std::uint32_t p = 0; p < 12; ++p) EXPECT_EQ(l.perm[p], p);
}

TEST(BuildLayout, GroupsAreContiguousBlocks) {
    const auto l = build_layout(stats_from_variance(std::vector<double>(512, 1.0)), 4, 3, 16, {});
    ASSERT_EQ(l.n_sub, 128u);
    for (std::size_t i = 0; i < 128; ++i) EXPECT_EQ(l.group_of[i], i / 8);
}

TEST(BuildLayout, DescendingVariancePartitionProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(48);
        for (auto& x : v) x = std::floor(u(rng));
        const auto l = build_layout(stats_from_variance(v), 4, 2, 12, {});
        for (std::size_t i = 0; i + 1 < l.n_sub; ++i) {
            double lo = 1e300, hi = -1;
            for (std::size_t d = 0; d < 4; ++d) lo = std::min(lo, v[l.perm[i * 4 + d]]);
            for (std::size_t d = 0; d < 4; ++d) hi = std::max(hi, v[l.perm[(i + 1) * 4 + d]]);
            EXPECT_GE(lo, hi);
        }
        std::vector<float> z(48);
        for (auto& x : z) x = static_cast<float>(u(rng));
        std::vector<double> laid(48), back(48);
        l.gather(z, laid);
        l.scatter(laid, back);
        for (std::size_t c = 0; c < 48; ++c) EXPECT_EQ(back[c], static_cast<double>(z[c]));
        const auto inv = l.inverse_perm();
        for (std::size_t c = 0; c < 48; ++c) EXPECT_EQ(l.perm[inv[c]], c);
    }
}

TEST(BuildLayout, ConfigErrors) {
    const auto s = stats_from_variance(std::vector<double>(10, 1.0));
    EXPECT_THROW(build_layout(s, 3, 2, 1, {}), ConfigError);  // 10 % 3
    EXPECT_THROW(build_layout(s, 2, 2, 3, {}), ConfigError);  // 5 % 3
    EXPECT_THROW(build_layout(s, 2, 2, 0, {}), ConfigError);
    EXPECT_THROW(build_layout(s, 2, 2, 6, {}), ConfigError);
    EXPECT_THROW(build_layout(s, 2, 2, 1, {AllocationPreset::type1, {}}), ConfigError);  // odd N
}

TEST(AllocationPreset, TypeIMatrix) {
    const auto b = allocation_preset(AllocationPreset::type1, 128, 3);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(row_of(b, i), (std::vector<std::uint8_t>{8, 7, 6}));
    for (std::size_t i = 64; i < 128; ++i) EXPECT_EQ(row_of(b, i), (std::vector<std::uint8_t>{6, 5, 4}));
}

TEST(AllocationPreset, TypeIIAndIII) {
    const auto b2 = allocation_preset(AllocationPreset::type2, 128, 3);
    for (std::size_t i = 0; i < 128; ++i)
        EXPECT_EQ(row_of(b2, i), (std::vector<std::uint8_t>(3, i < 64 ? 7 : 5)));
    const auto b3 = allocation_preset(AllocationPreset::type3, 4, 2);
    EXPECT_EQ(b3.values, std::vector<std::uint8_t>(8, 6));
}

TEST(AllocationPreset, EveryPresetSatisfiesMonotonicity) {
    for (auto p : {AllocationPreset::type1, AllocationPreset::type2, AllocationPreset::type3})
        for (std::size_t n : {2, 8, 32})
            for (std::size_t t = 1; t <= 6; ++t) EXPECT_NO_THROW(validate_bits(allocation_preset(p, n, t)));
    EXPECT_THROW(allocation_preset(AllocationPreset::type1, 4, 7), ConfigError);
}

TEST(AllocationPreset, CustomIsValidated) {
    Allocation a{AllocationPreset::custom, BitMatrix(2, 2, 4)};
    EXPECT_NO_THROW(allocation_preset(a, 2, 2));
    a.custom.at(0, 1) = 5;  // increases along t
    EXPECT_THROW(allocation_preset(a, 2, 2), ConfigError);
    a.custom = BitMatrix(2, 2, 4);
    a.custom.at(1, 0) = 5;  // increases along i
    EXPECT_THROW(allocation_preset(a, 2, 2), ConfigError);
    a.custom = BitMatrix(2, 2, 0);
    EXPECT_THROW(allocation_preset(a, 2, 2), ConfigError);
    a.custom = BitMatrix(3, 2, 4);
    EXPECT_THROW(allocation_preset(a, 2, 2), ConfigError);
}

TEST(AllocationPreset, Names) {
    EXPECT_EQ(parse_preset("TypeI"), AllocationPreset::type1);
    EXPECT_EQ(parse_preset("type2"), AllocationPreset::type2);
    EXPECT_EQ(parse_preset("TYPEIII"), AllocationPreset::type3);
    EXPECT_EQ(parse_preset("file"), AllocationPreset::custom);
    EXPECT_THROW(parse_preset("type4"), ConfigError);
}

TEST(Layout, GroupMembersMustShareBits) {
    auto l = build_layout(stats_from_variance(std::vector<double>(8, 1.0)), 2, 1, 2, {});
    l.bits.at(1, 0) = 5;
    EXPECT_THROW(l.validate(), ConfigError);
}
