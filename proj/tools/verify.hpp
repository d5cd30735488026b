#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>

#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/rate.hpp"

namespace msvq::tools {

struct VerifyOptions {
    std::size_t max_n = 6;
    /// Rows used by the slow direct-evaluation checks.
    std::size_t direct_rows = 256;
    std::size_t budgets = 8;
};

/// Runs the oracle cross-checks, printing one PASS/FAIL (or INFO) line each.
/// Returns the number of failures.
std::size_t run_verify(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                       const VerifyOptions& options, std::ostream& out);

} // namespace msvq::tools
