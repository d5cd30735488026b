#include <gtest/gtest.h>

#include <random>

#include "msvq/error.hpp"
#include "msvq/quantizer.hpp"
#include "support.hpp"

using namespace msvq;

namespace {

const test::Trained& fixture() {
    static const test::Trained t = test::small_model(1500, 24, 4, 3, 4, 21);
    return t;
}

std::vector<std::uint8_t> uniform_stages(std::size_t n, std::uint8_t s) { return std::vector<std::uint8_t>(n, s); }

} // namespace

TEST(Plan, ExactBitsArithmetic) {
    Allocation a{AllocationPreset::custom, BitMatrix(2, 2)};
    a.custom.values = {3, 3, 2, 2};
    FeatureStats s;
    s.mean.assign(2, 0.0);
    s.variance.assign(2, 1.0);
    const auto layout = build_layout(s, 1, 2, 2, a);
    EXPECT_EQ(make_plan(layout, {2, 1}).exact_bits, 8u);
    EXPECT_EQ(make_plan(layout, {0, 0}).exact_bits, 0u);
    EXPECT_EQ(full_plan(layout).exact_bits, 10u);
    EXPECT_THROW(make_plan(layout, {3, 0}), ConfigError);
    EXPECT_THROW(make_plan(layout, {1}), ConfigError);
    auto p = make_plan(layout, {1, 1});
    p.exact_bits = 4;
    EXPECT_THROW(validate_plan(layout, p), CorruptionError);
}

TEST(Encode, ZeroPlanReconstructsStoredMean) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    const auto enc = encode(f.model, f.data.row(0), make_plan(l, uniform_stages(l.n_sub, 0)));
    EXPECT_EQ(enc.encoded.plan.exact_bits, 0u);
    for (const auto& v : enc.encoded.indices) EXPECT_TRUE(v.empty());
    std::vector<double> mean(l.m_dim);
    l.scatter(std::vector<double>(f.model.fallback_means().begin(), f.model.fallback_means().end()), mean);
    EXPECT_EQ(enc.z_hat, mean);
}

TEST(Encode, SingleStageIsTheCodeword) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    const auto enc = encode(f.model, f.data.row(3), make_plan(l, uniform_stages(l.n_sub, 1)));
    for (std::size_t i = 0; i < l.n_sub; ++i) {
        const auto c = f.model.resolve(i, 0).codeword(enc.encoded.indices[i][0]);
        for (std::size_t j = 0; j < l.sub_dim; ++j)
            EXPECT_EQ(enc.z_hat[l.perm[i * l.sub_dim + j]], static_cast<double>(c[j]));
    }
}

TEST(Encode, DecodeIsBitExact) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> s(0, static_cast<int>(l.t_max));
    for (std::size_t r = 0; r < 300; ++r) {
        std::vector<std::uint8_t> st(l.n_sub);
        for (auto& x : st) x = static_cast<std::uint8_t>(s(rng));
        const auto enc = encode(f.model, f.data.row(r), make_plan(l, st));
        EXPECT_EQ(decode(f.model, enc.encoded), enc.z_hat);
        for (std::size_t i = 0; i < l.n_sub; ++i) EXPECT_EQ(enc.encoded.indices[i].size(), st[i]);
    }
}

TEST(Encode, MeanErrorNonIncreasingInStages) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    std::vector<double> mean_err(l.t_max + 1, 0.0);
    for (std::size_t r = 0; r < f.data.rows(); ++r)
        for (std::size_t t = 0; t <= l.t_max; ++t)
            mean_err[t] += squared_error(f.data.row(r), encode(f.model, f.data.row(r),
                                                               make_plan(l, uniform_stages(l.n_sub, static_cast<std::uint8_t>(t))))
                                                            .z_hat);
    for (std::size_t t = 1; t <= l.t_max; ++t) EXPECT_LE(mean_err[t], mean_err[t - 1]);
}

TEST(Encode, FullPlanMatchesTrainerDistortion) {
    const auto& f = fixture();
    const auto plan = full_plan(f.model.layout());
    double err = 0.0;
    for (std::size_t r = 0; r < f.data.rows(); ++r) err += squared_error(f.data.row(r), encode(f.model, f.data.row(r), plan).z_hat);
    err /= static_cast<double>(f.data.rows());
    EXPECT_NEAR(err, f.report.per_stage_distortion.back(), 1e-9 * err);
}

TEST(Encode, TruncationErrorsAgreeWithEncode) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    std::vector<double> tab(l.n_sub * (l.t_max + 1));
    for (std::size_t r = 0; r < 50; ++r) {
        truncation_errors(f.model, f.data.row(r), tab);
        for (std::size_t T = 0; T <= l.t_max; ++T) {
            const auto z_hat = encode(f.model, f.data.row(r), make_plan(l, uniform_stages(l.n_sub, static_cast<std::uint8_t>(T)))).z_hat;
            double total = 0.0;
            for (std::size_t i = 0; i < l.n_sub; ++i) total += tab[i * (l.t_max + 1) + T];
            EXPECT_NEAR(total, squared_error(f.data.row(r), z_hat), 1e-9 * std::max(1.0, total));
        }
    }
}

TEST(Encode, EveryCoordinateWrittenOnce) {
    const auto& f = fixture();
    const auto& l = f.model.layout();
    std::vector<int> hits(l.m_dim, 0);
    for (auto p : l.perm) ++hits[p];
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Decode, RejectsOutOfRangeIndex) {
    const auto& f = fixture();
    auto enc = encode(f.model, f.data.row(0), full_plan(f.model.layout())).encoded;
    enc.indices[2][1] = 1u << 4;
    EXPECT_THROW(decode(f.model, enc), CorruptionError);
}

TEST(Encode, PlanMismatch) {
    const auto& f = fixture();
    SelectionPlan p;
    p.stages = {1, 1};
    EXPECT_THROW(encode(f.model, f.data.row(0), p), ConfigError);
}
