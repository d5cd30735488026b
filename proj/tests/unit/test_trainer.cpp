#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msvq/entropy.hpp"
#include "msvq/error.hpp"
#include "msvq/parallel.hpp"
#include "msvq/synth.hpp"
#include "msvq/trainer.hpp"
#include "support.hpp"

using namespace msvq;

namespace {

// Residual energies after each stage, recomputed with the search kernels only.
std::vector<double> recompute_stage_energy(const MsvqModel& model, const FeatureMatrix& data) {
    const auto& l = model.layout();
    std::vector<double> energy(l.t_max, 0.0);
    std::vector<double> laid(l.m_dim);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        l.gather(data.row(r), laid);
        for (std::size_t i = 0; i < l.n_sub; ++i) {
            std::vector<double> res(laid.begin() + static_cast<std::ptrdiff_t>(i * l.sub_dim),
                                    laid.begin() + static_cast<std::ptrdiff_t>((i + 1) * l.sub_dim));
            for (std::size_t t = 0; t < l.t_max; ++t) {
                const auto& cb = model.resolve(i, t);
                const auto idx = model.ec_enabled() ? nearest_rate_penalized(cb, res, model.lambda(t)).index
                                                    : nearest(cb, res).index;
                for (std::size_t j = 0; j < l.sub_dim; ++j) res[j] -= cb.codeword(idx)[j];
                for (double x : res) energy[t] += x * x;
            }
        }
    }
    for (auto& e : energy) e /= static_cast<double>(data.rows());
    return energy;
}

FeatureMatrix blobs(std::size_t rows, std::size_t dim, std::uint64_t seed) { return synth::gmm(rows, dim, 6, seed); }

} // namespace

TEST(LloydStep, TwoClusterSeparation) {
    const std::vector<double> pts{0.0, 1.0};
    const auto res = lloyd_step(pts, 1, Codebook(1, 1, {0.4f, 0.6f}), false, 1.0);
    EXPECT_EQ(res.codebook.vectors(), (std::vector<float>{0.f, 1.f}));
    EXPECT_EQ(res.stats.distortion_updated, 0.0);
}

TEST(LloydStep, IdenticalPointsCollapse) {
    const std::vector<double> pts(20, 2.5);
    const auto res = lloyd_step(pts, 2, Codebook(2, 2, {0.f, 0.f, 1.f, 1.f, 5.f, 5.f, 9.f, 9.f}), false, 1.0);
    EXPECT_EQ(res.stats.counts[1], 10u);
    EXPECT_EQ(res.stats.reseeded, 3u);
    for (float v : res.codebook.vectors()) EXPECT_EQ(v, 2.5f);
    EXPECT_EQ(res.stats.distortion_updated, 0.0);
}

TEST(LloydStep, PlainStepNeverIncreasesDistortion) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n;
        std::vector<double> pts(300 * 3);
        for (auto& x : pts) x = n(rng);
        Codebook cb = kmeans_pp_init(pts, 3, 3, rng);
        for (int it = 0; it < 5; ++it) {
            const auto res = lloyd_step(pts, 3, cb, false, 1.0);
            // Direct evaluation of the incoming codebook's distortion.
            double before = 0.0;
            for (std::size_t p = 0; p < 300; ++p) before += nearest(cb, std::span(pts).subspan(p * 3, 3)).distortion;
            before /= 300.0;
            EXPECT_NEAR(res.stats.distortion_assigned, before, 1e-12 * before);
            EXPECT_LE(res.stats.distortion_updated, before * (1 + 1e-12));
            cb = res.codebook;
        }
    }
}

TEST(LloydStep, EcSubstepsNeverIncreaseObjective) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n;
        std::vector<double> pts(400 * 2);
        for (auto& x : pts) x = n(rng);
        Codebook cb = kmeans_pp_init(pts, 2, 3, rng);
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 8; ++it) {
            const auto res = lloyd_step(pts, 2, cb, true, 0.7);
            EXPECT_LE(res.stats.objective_updated, res.stats.objective_assigned * (1 + 1e-9));
            if (res.stats.reseeded == 0) EXPECT_LE(res.stats.objective_assigned, prev * (1 + 1e-9));
            prev = res.stats.reseeded == 0 ? res.stats.objective_updated : std::numeric_limits<double>::infinity();
            cb = res.codebook;
        }
    }
}

TEST(Train, DistinctPointsInterpolate) {
    FeatureMatrix data(8, 2);
    for (std::size_t r = 0; r < 8; ++r) {
        data(r, 0) = static_cast<float>(r);
        data(r, 1) = static_cast<float>(r * r) * 0.5f;
    }
    const auto layout = test::uniform_layout(2, 2, 1, 3);
    TrainConfig cfg;
    cfg.seed = 3;
    const auto res = train(data, layout, cfg);
    EXPECT_EQ(res.report.per_stage_distortion.back(), 0.0);
}

TEST(Train, StageEnergiesStrictlyDecreaseAndMatchRecomputation) {
    const auto data = blobs(3000, 16, 4);
    const auto layout = test::uniform_layout(16, 4, 3, 4);
    TrainConfig cfg;
    cfg.seed = 12;
    const auto res = train(data, layout, cfg);
    const auto& e = res.report.per_stage_distortion;
    ASSERT_EQ(e.size(), 3u);
    EXPECT_LT(e[0], res.report.initial_energy);
    EXPECT_LT(e[1], e[0]);
    EXPECT_LT(e[2], e[1]);
    const auto again = recompute_stage_energy(res.model, data);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(again[t], e[t], 1e-9 * e[t]);
}

TEST(Train, PlainDistortionTraceNonIncreasing) {
    const auto t = test::small_model(2000, 16, 4, 2, 5, 8);
    for (const auto& g : t.report.groups)
        for (std::size_t k = 1; k < g.distortion_trace.size(); ++k)
            EXPECT_LE(g.distortion_trace[k], g.distortion_trace[k - 1] * (1 + 1e-12));
}

TEST(Train, EcObjectiveTraceNonIncreasing) {
    const auto t = test::small_model(2000, 16, 4, 2, 5, 8, true);
    for (const auto& g : t.report.groups) {
        ASSERT_FALSE(g.objective_trace.empty());
        for (std::size_t k = 1; k < g.objective_trace.size(); ++k)
            EXPECT_LE(g.objective_trace[k], g.objective_trace[k - 1] * (1 + 1e-9) + 1e-12)
                << "group " << g.group << " stage " << g.stage << " step " << k;
    }
}

TEST(Train, SmallLambdaCollapsesRate) {
    const auto data = synth::gauss_corr(4000, 16, 0.8, 2);
    const auto layout = test::uniform_layout(16, 4, 1, 6);
    TrainConfig cfg;
    cfg.ec = true;
    cfg.lambda = {0.05};
    cfg.normalize_lambda = true;
    const auto res = train(data, layout, cfg);
    const auto pmfs = estimate_pmfs(res.model, data);
    for (std::size_t k = 0; k < pmfs.size(); ++k) {
        const HuffmanCode code(res.model.codebooks()[k].code_lengths());
        EXPECT_LT(avg_bits(pmfs[k], code).avg_length, 6.0);
    }
}

TEST(Train, DeterministicAcrossThreadCounts) {
    const auto data = synth::gauss_corr(5000, 16, 0.9, 1);
    const auto layout = test::uniform_layout(16, 4, 2, 4);
    TrainConfig cfg;
    cfg.seed = 99;
    cfg.ec = true;
    cfg.lambda = {2.0};
    parallel::set_max_threads(1);
    const auto a = train(data, layout, cfg);
    parallel::set_max_threads(4);
    const auto b = train(data, layout, cfg);
    parallel::set_max_threads(0);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.report.to_json(), b.report.to_json());
}

TEST(Train, Errors) {
    const auto layout = test::uniform_layout(8, 4, 1, 6);
    EXPECT_THROW(train(synth::gauss_iid(20, 8, 1), layout, {}), DataError);  // 40 residuals < 64 codewords
    EXPECT_THROW(train(synth::gauss_iid(200, 12, 1), layout, {}), DataError);
    TrainConfig bad;
    bad.max_iters = 0;
    EXPECT_THROW(train(synth::gauss_iid(200, 8, 1), layout, bad), ConfigError);
    TrainConfig ec;
    ec.ec = true;
    ec.lambda = {1.0, 2.0, 3.0};
    EXPECT_THROW(train(synth::gauss_iid(200, 8, 1), layout, ec), ConfigError);
    ec.lambda = {-1.0};
    EXPECT_THROW(train(synth::gauss_iid(200, 8, 1), layout, ec), ConfigError);
}

TEST(Train, ReportJsonHasStages) {
    const auto t = test::small_model(500, 8, 4, 2, 3, 2);
    const auto j = t.report.to_json();
    EXPECT_NE(j.find("\"stages\""), std::string::npos);
    EXPECT_NE(j.find("\"usage\""), std::string::npos);
}
