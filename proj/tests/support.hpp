#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msvq/feature_matrix.hpp"
#include "msvq/layout.hpp"
#include "msvq/model.hpp"
#include "msvq/rate.hpp"
#include "msvq/trainer.hpp"

namespace msvq::test {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("msvq_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline SubVectorLayout uniform_layout(std::size_t m, std::size_t d, std::size_t t_max, unsigned bits,
                                      std::size_t groups = 0) {
    FeatureStats stats;
    stats.mean.assign(m, 0.0);
    stats.variance.assign(m, 1.0);
    stats.sample_count = 2;
    Allocation a;
    a.preset = AllocationPreset::custom;
    a.custom = BitMatrix(m / d, t_max, static_cast<std::uint8_t>(bits));
    return build_layout(stats, d, t_max, groups == 0 ? m / d : groups, a);
}

struct Trained {
    FeatureMatrix data;
    MsvqModel model;
    TrainReport report;
};

/// Small plain or EC model on gauss-corr data, deterministic per seed.
Trained small_model(std::size_t rows, std::size_t m, std::size_t d, std::size_t t_max, unsigned bits,
                    std::uint64_t seed, bool ec = false, std::size_t groups = 0);

enum class StepBits { uniform, per_row, random };

/// Random table with integer losses: rows strictly decreasing, loss(i, T_max) shared.
/// convex = true makes successive drops non-increasing.
MarginalLossTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t t_max, bool convex,
                               StepBits shape, unsigned max_bits = 8);

/// Σ_i loss(i, T_i).
inline double total_loss(const MarginalLossTable& t, const std::vector<std::uint8_t>& stages) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) s += t.loss_at(i, stages[i]);
    return s;
}

} // namespace msvq::test
