#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/quantizer.hpp"

namespace msvq {

enum class BitMode { exact, average };

/// Empirical marginal loss of truncating one sub-vector while every other
/// sub-vector keeps all stages, plus the bit cost of each stage step.
struct MarginalLossTable {
    std::size_t n = 0;
    std::size_t t_max = 0;
    BitMode mode = BitMode::exact;
    /// n x (t_max + 1): loss(i, T).
    std::vector<double> loss;
    /// n x t_max: bits of stage t for sub-vector i (B_i^(t) or mean code length).
    std::vector<double> step_bits;

    double loss_at(std::size_t i, std::size_t T) const { return loss[i * (t_max + 1) + T]; }
    double& loss_at(std::size_t i, std::size_t T) { return loss[i * (t_max + 1) + T]; }
    double bits_at(std::size_t i, std::size_t t) const { return step_bits[i * t_max + t]; }
    double& bits_at(std::size_t i, std::size_t t) { return step_bits[i * t_max + t]; }

    /// Σ of every step cost.
    double total_bits() const;

    /// Shape, finiteness, positive step costs, common full-depth loss (1e-9 rel).
    /// Throws CorruptionError.
    void validate() const;

    bool operator==(const MarginalLossTable&) const = default;
};

/// Fast path: one truncation pass per data row, using the fact that squared
/// error is additive over sub-vectors. Mode follows model.ec_enabled(); EC
/// models without entropy codes raise StateError.
MarginalLossTable build_table(const MsvqModel& model, const FeatureMatrix& data);

/// Incremental allocation: from all-zero stages, repeatedly add the stage with
/// the largest loss drop per bit among those that still fit in b_cap (ties to
/// the lowest sub-vector index) until nothing fits. exact_bits is filled only
/// in exact mode; use plan_for_model() to get layout-accurate accounting.
SelectionPlan select_stages(const MarginalLossTable& table, double b_cap);

/// select_stages() with exact_bits recomputed from the model layout.
SelectionPlan plan_for_model(const MsvqModel& model, const MarginalLossTable& table, double b_cap);

/// loss(0, T_max) + Σ_i [loss(i, T_i) - loss(i, T_max)]: the predicted mean
/// squared error of a plan when the table holds feature-space MSE.
double predicted_loss(const MarginalLossTable& table, std::span<const std::uint8_t> stages);

struct RowShape {
    bool monotone = false; // loss strictly decreasing in T
    bool convex = false;   // successive drops non-increasing
};

struct ConvexityReport {
    std::vector<RowShape> rows;
    bool all_monotone = true;
    bool all_convex = true;
    /// B_i^(t) identical across t for every row.
    bool equal_row_bits = true;
    /// Every step cost identical across the whole table.
    bool uniform_bits = true;
};

ConvexityReport validate_convexity(const MarginalLossTable& table);

/// MLT1 JSON: {"format": "MLT1", "n", "t_max", "mode", "loss", "step_bits"}.
std::string table_to_json(const MarginalLossTable& table);
MarginalLossTable table_from_json(std::string_view text);

/// Writes the table and returns the 64-bit digest of the bytes written.
std::uint64_t write_table(const std::string& path, const MarginalLossTable& table);

struct LoadedTable {
    MarginalLossTable table;
    std::uint64_t digest = 0;
};
LoadedTable read_table(const std::string& path);

} // namespace msvq
