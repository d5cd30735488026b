#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msvq/codebook.hpp"
#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/rate.hpp"

namespace msvq::oracle {

inline constexpr std::uint64_t kMaxPlans = 10'000'000;

struct OracleResult {
    std::vector<std::uint8_t> best_plan;
    /// Σ_i loss(i, T_i).
    double best_loss = 0.0;
    /// Feasible plans visited.
    std::uint64_t enumerated = 0;
};

/// Enumerates every stage vector whose cumulative step bits fit in b_cap and
/// returns the one with the smallest Σ_i loss(i, T_i); ties go to the
/// lexicographically smallest plan. Throws SizeGuardError when
/// (T_max + 1)^N exceeds kMaxPlans.
OracleResult exhaustive_select(const MarginalLossTable& table, double b_cap);

/// Plain linear scan; ties to the lowest index.
std::size_t exhaustive_nearest(const Codebook& codebook, std::span<const double> x);

/// Mean ||z - ẑ||^2 over data with sub-vector i at T stages and every other
/// sub-vector at full depth, from full encodes.
double direct_marginal_loss(const MsvqModel& model, const FeatureMatrix& data, std::size_t i, std::size_t T);

} // namespace msvq::oracle
