#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msvq/codebook.hpp"
#include "msvq/feature_matrix.hpp"
#include "msvq/layout.hpp"
#include "msvq/model.hpp"

namespace msvq {

struct TrainConfig {
    std::size_t max_iters = 50;
    double rel_tol = 1e-5;
    std::uint64_t seed = 0;
    bool ec = false;
    /// One weight per stage, or a single weight applied to every stage.
    std::vector<double> lambda;
    /// Divide lambda^(t) by the mean per-coordinate variance of the stage-t
    /// training residuals, so the same lambda means the same trade-off at any
    /// feature scale.
    bool normalize_lambda = false;
    bool strict = false;
};

/// Per-(group, stage) Lloyd history.
struct GroupReport {
    std::size_t group = 0;
    std::size_t stage = 0;
    std::size_t iterations = 0;
    double lambda = 1.0;
    /// Mean squared error of each assignment pass, then of the final update.
    std::vector<double> distortion_trace;
    /// Lagrangian per assignment pass, then after the final update (EC only).
    std::vector<double> objective_trace;
    std::vector<std::uint64_t> usage;
};

struct TrainReport {
    /// Mean ||z||^2 per vector: the residual energy entering stage 1.
    double initial_energy = 0.0;
    /// Mean ||z - mean||^2 per vector: the zero-stage reconstruction error.
    double fallback_energy = 0.0;
    /// Mean residual energy per vector after each stage.
    std::vector<double> per_stage_distortion;
    std::vector<GroupReport> groups;

    std::string to_json() const;
};

struct LloydStats {
    std::vector<std::uint32_t> assignment;
    std::vector<std::uint64_t> counts;
    /// Mean squared error under the incoming codebook.
    double distortion_assigned = 0.0;
    /// Mean squared error after the centroid update (same assignment).
    double distortion_updated = 0.0;
    /// Lagrangian before and after the update (EC mode; equals distortion otherwise).
    double objective_assigned = 0.0;
    double objective_updated = 0.0;
    std::size_t reseeded = 0;
};

struct LloydResult {
    Codebook codebook;
    LloydStats stats;
};

/// EC Lagrangian of an assignment, per point:
///   mean_n(lambda * ||x_n - c_a(n)||^2 - log2 p_a(n)) - (1/n) * sum_k log2 p_k.
/// The last term is the Laplace pseudo-count; smoothed priors minimize it exactly.
double ec_objective(double mean_distortion, double mean_rate, std::span<const double> prior, std::size_t n_points,
                    double lambda);

/// One Lloyd iteration over `points` (n x dim, row-major):
///  (a) assign by nearest() or nearest_rate_penalized(),
///  (b) move every non-empty codeword to its cell mean,
///  (c) EC: prior <- floor((count + 1) / (n + K)),
///  (d) re-seed empty codewords onto the points with the largest error.
LloydResult lloyd_step(std::span<const double> points, std::size_t dim, const Codebook& codebook, bool ec,
                       double lambda);

/// k-means++ seeding of a 2^bits codebook (uniform prior).
Codebook kmeans_pp_init(std::span<const double> points, std::size_t dim, unsigned bits, std::mt19937_64& rng);

struct TrainResult {
    MsvqModel model;
    TrainReport report;
};

/// Sequential multi-stage training: each stage fits one codebook per group to
/// the pooled residuals of the group's sub-vectors, then subtracts its output.
/// EC models additionally get Huffman codes built from the training data.
TrainResult train(const FeatureMatrix& data, const SubVectorLayout& layout, const TrainConfig& config);

} // namespace msvq
