#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/rate.hpp"

namespace msvq {

struct SweepRow {
    std::uint32_t b_cap = 0;
    /// Stage counts in sub-vector order, joined with '-'.
    std::string stages;
    std::size_t active_modules = 0;
    /// Budgeted bits of the plan under the table's step costs.
    double plan_bits = 0.0;
    double predicted_loss = 0.0;
    /// Mean ||z - ẑ||^2 of the receiver-side reconstruction.
    double measured_mse = 0.0;
    /// Payload body bits per vector, padding included, header excluded.
    double mean_payload_bits = 0.0;
    /// Index bits per vector before padding.
    double mean_index_bits = 0.0;
    double wall_ms = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
};

/// Budgets lo, lo + step, ... up to and including hi.
std::vector<std::uint32_t> budget_grid(std::uint32_t lo, std::uint32_t hi, std::uint32_t step);

/// Parses "lo:hi:step"; ConfigError when malformed or step is 0.
std::vector<std::uint32_t> parse_budget_grid(const std::string& spec);

/// Encodes, serializes, parses and decodes data at every budget.
SweepReport run_sweep(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                      std::vector<std::uint32_t> budgets);

/// Header: b_cap,stages,active_modules,plan_bits,predicted_loss,measured_mse,
/// mean_payload_bits,mean_index_bits,wall_ms
void write_csv(std::ostream& out, const SweepReport& report);

/// Measured MSE against mean payload bits as a standalone SVG.
void write_svg(std::ostream& out, const SweepReport& report);

} // namespace msvq
