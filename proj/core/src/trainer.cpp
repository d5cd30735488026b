#include "msvq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "msvq/entropy.hpp"
#include "msvq/error.hpp"
#include "msvq/parallel.hpp"

namespace msvq {

namespace {

constexpr std::size_t kChunk = 2048;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct ChunkPartial {
    std::vector<double> sums;
    std::vector<std::uint64_t> counts;
    double distortion = 0.0;
    double rate = 0.0;
};

double mean_rate_of(std::span<const std::uint64_t> counts, const Codebook& cb, std::size_t n) {
    double r = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] != 0) r += static_cast<double>(counts[k]) * cb.rate_bits(k);
    return r / static_cast<double>(n);
}

} // namespace

double ec_objective(double mean_distortion, double mean_rate, std::span<const double> prior, std::size_t n_points,
                    double lambda) {
    double pseudo = 0.0;
    for (double p : prior) pseudo -= std::log2(p);
    return lambda * mean_distortion + mean_rate + pseudo / static_cast<double>(n_points);
}

LloydResult lloyd_step(std::span<const double> points, std::size_t dim, const Codebook& codebook, bool ec,
                       double lambda) {
    if (dim == 0 || points.empty() || points.size() % dim != 0)
        throw ConfigError("lloyd_step: need at least one point of dimension " + std::to_string(dim));
    if (codebook.dim() != dim) throw ConfigError("lloyd_step: codebook dimension mismatch");
    const std::size_t n = points.size() / dim;
    const std::size_t k_count = codebook.size();

    LloydStats stats;
    stats.assignment.resize(n);
    std::vector<ChunkPartial> partials(parallel::chunk_count(n, kChunk));
    parallel::for_chunks(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        ChunkPartial& part = partials[c];
        part.sums.assign(k_count * dim, 0.0);
        part.counts.assign(k_count, 0);
        for (std::size_t p = begin; p < end; ++p) {
            auto x = points.subspan(p * dim, dim);
            std::uint32_t idx;
            if (ec) {
                const RateMatch m = nearest_rate_penalized(codebook, x, lambda);
                idx = m.index;
                part.distortion += m.distortion;
                part.rate += m.rate_bits;
            } else {
                const Match m = nearest(codebook, x);
                idx = m.index;
                part.distortion += m.distortion;
            }
            stats.assignment[p] = idx;
            ++part.counts[idx];
            double* s = part.sums.data() + std::size_t{idx} * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
        }
    });

    std::vector<double> sums(k_count * dim, 0.0);
    stats.counts.assign(k_count, 0);
    double distortion = 0.0;
    double rate = 0.0;
    for (const auto& part : partials) {
        for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += part.sums[i];
        for (std::size_t k = 0; k < k_count; ++k) stats.counts[k] += part.counts[k];
        distortion += part.distortion;
        rate += part.rate;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    stats.distortion_assigned = distortion * inv_n;
    stats.objective_assigned =
        ec ? ec_objective(stats.distortion_assigned, rate * inv_n, codebook.prior(), n, lambda)
           : stats.distortion_assigned;

    std::vector<float> vectors = codebook.vectors();
    for (std::size_t k = 0; k < k_count; ++k) {
        if (stats.counts[k] == 0) continue;
        const double inv = 1.0 / static_cast<double>(stats.counts[k]);
        for (std::size_t j = 0; j < dim; ++j) vectors[k * dim + j] = static_cast<float>(sums[k * dim + j] * inv);
    }

    // Error of every point against its updated codeword.
    std::vector<double> error(n);
    std::vector<double> err_partial(partials.size(), 0.0);
    parallel::for_chunks(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double acc = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
            const float* cw = vectors.data() + std::size_t{stats.assignment[p]} * dim;
            double e = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = points[p * dim + j] - static_cast<double>(cw[j]);
                e += d * d;
            }
            error[p] = e;
            acc += e;
        }
        err_partial[c] = acc;
    });
    stats.distortion_updated = std::accumulate(err_partial.begin(), err_partial.end(), 0.0) * inv_n;

    std::vector<std::size_t> empty;
    for (std::size_t k = 0; k < k_count; ++k)
        if (stats.counts[k] == 0) empty.push_back(k);
    if (!empty.empty()) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t take = std::min(empty.size(), n);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](std::size_t a, std::size_t b) { return error[a] > error[b] || (error[a] == error[b] && a < b); });
        for (std::size_t e = 0; e < empty.size(); ++e) {
            const std::size_t p = order[e % take];
            for (std::size_t j = 0; j < dim; ++j)
                vectors[empty[e] * dim + j] = static_cast<float>(points[p * dim + j]);
        }
        stats.reseeded = empty.size();
    }

    std::vector<double> prior = codebook.prior();
    if (ec) {
        std::vector<double> smoothed(k_count);
        for (std::size_t k = 0; k < k_count; ++k) smoothed[k] = static_cast<double>(stats.counts[k]) + 1.0;
        prior = floor_and_normalize(smoothed);
    }
    Codebook updated(dim, codebook.bits(), std::move(vectors), std::move(prior));
    stats.objective_updated =
        ec ? ec_objective(stats.distortion_updated, mean_rate_of(stats.counts, updated, n), updated.prior(), n, lambda)
           : stats.distortion_updated;
    return {std::move(updated), std::move(stats)};
}

Codebook kmeans_pp_init(std::span<const double> points, std::size_t dim, unsigned bits, std::mt19937_64& rng) {
    const std::size_t n = points.size() / dim;
    const std::size_t k_count = std::size_t{1} << bits;
    if (n == 0) throw DataError("k-means++: no points");
    std::vector<float> vectors(k_count * dim);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::size_t chosen = pick(rng);
    for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t j = 0; j < dim; ++j) vectors[k * dim + j] = static_cast<float>(points[chosen * dim + j]);
        if (k + 1 == k_count) break;
        const float* c = vectors.data() + k * dim;
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            double d = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double e = points[p * dim + j] - static_cast<double>(c[j]);
                d += e * e;
            }
            min_dist[p] = std::min(min_dist[p], d);
            total += min_dist[p];
        }
        if (total <= 0.0) {
            chosen = pick(rng);
            continue;
        }
        const double target = unif(rng) * total;
        double acc = 0.0;
        chosen = n - 1;
        for (std::size_t p = 0; p < n; ++p) {
            acc += min_dist[p];
            if (acc > target && min_dist[p] > 0.0) {
                chosen = p;
                break;
            }
        }
    }
    return Codebook(dim, bits, std::move(vectors));
}

TrainResult train(const FeatureMatrix& data, const SubVectorLayout& layout, const TrainConfig& config) {
    layout.validate();
    if (config.max_iters < 1) throw ConfigError("train: max_iters must be >= 1");
    if (!(config.rel_tol > 0.0)) throw ConfigError("train: rel_tol must be > 0");
    if (data.cols() != layout.m_dim)
        throw DataError("train: data has " + std::to_string(data.cols()) + " columns, layout expects " +
                        std::to_string(layout.m_dim));
    if (data.rows() == 0) throw DataError("train: no training rows");
    data.require_finite();

    const std::size_t rows = data.rows();
    const std::size_t m = layout.m_dim;
    const std::size_t d = layout.sub_dim;
    const std::size_t n_sub = layout.n_sub;
    const std::size_t t_max = layout.t_max;
    const std::size_t g_count = layout.n_groups;

    std::vector<double> lambda(t_max, 1.0);
    if (config.ec) {
        if (config.lambda.size() == 1) {
            lambda.assign(t_max, config.lambda[0]);
        } else if (config.lambda.size() == t_max) {
            lambda = config.lambda;
        } else {
            throw ConfigError("train: EC mode needs 1 or T_max = " + std::to_string(t_max) + " lambda values");
        }
        for (double l : lambda)
            if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("train: lambda must be positive");
    }

    std::vector<std::vector<std::size_t>> members(g_count);
    for (std::size_t i = 0; i < n_sub; ++i) members[layout.group_of[i]].push_back(i);
    for (std::size_t g = 0; g < g_count; ++g) {
        for (std::size_t t = 0; t < t_max; ++t) {
            const std::size_t need = layout.codebook_size(members[g].front(), t);
            const std::size_t have = rows * members[g].size();
            if (have < need)
                throw DataError("train: group " + std::to_string(g) + ", stage " + std::to_string(t) + " has " +
                                std::to_string(have) + " training residuals for " + std::to_string(need) +
                                " codewords");
        }
    }

    // Residuals in layout order, rows x M.
    std::vector<double> residual(rows * m);
    for (std::size_t r = 0; r < rows; ++r) layout.gather(data.row(r), {residual.data() + r * m, m});

    TrainReport report;
    std::vector<double> mean(m, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t p = 0; p < m; ++p) mean[p] += residual[r * m + p];
    for (auto& v : mean) v /= static_cast<double>(rows);
    std::vector<float> fallback(m);
    for (std::size_t p = 0; p < m; ++p) fallback[p] = static_cast<float>(mean[p]);

    auto mean_energy = [&](auto&& per_row) {
        std::vector<double> partial(parallel::chunk_count(rows, kChunk), 0.0);
        parallel::for_chunks(rows, kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
            double acc = 0.0;
            for (std::size_t r = b; r < e; ++r) acc += per_row(r);
            partial[c] = acc;
        });
        return std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(rows);
    };
    report.initial_energy = mean_energy([&](std::size_t r) {
        double e = 0.0;
        for (std::size_t p = 0; p < m; ++p) e += residual[r * m + p] * residual[r * m + p];
        return e;
    });
    report.fallback_energy = mean_energy([&](std::size_t r) {
        double e = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
            const double x = residual[r * m + p] - static_cast<double>(fallback[p]);
            e += x * x;
        }
        return e;
    });

    std::vector<Codebook> codebooks(g_count * t_max);
    std::vector<double> points;
    for (std::size_t t = 0; t < t_max; ++t) {
        if (config.ec && config.normalize_lambda) {
            std::vector<double> mu(m, 0.0);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t p = 0; p < m; ++p) mu[p] += residual[r * m + p];
            for (auto& v : mu) v /= static_cast<double>(rows);
            double var = 0.0;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t p = 0; p < m; ++p) {
                    const double x = residual[r * m + p] - mu[p];
                    var += x * x;
                }
            var /= static_cast<double>(rows * m);
            if (!(var > 0.0))
                throw NumericalError("train: stage " + std::to_string(t) +
                                     " residual variance is zero; cannot normalize lambda");
            lambda[t] /= var;
        }

        for (std::size_t g = 0; g < g_count; ++g) {
            const auto& mem = members[g];
            const unsigned bits = layout.bits_at(mem.front(), t);
            const std::size_t n_points = rows * mem.size();
            points.resize(n_points * d);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t q = 0; q < mem.size(); ++q)
                    std::copy_n(residual.data() + r * m + mem[q] * d, d, points.data() + (r * mem.size() + q) * d);

            std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64((t << 32) | g)));
            Codebook cb = kmeans_pp_init(points, d, bits, rng);

            GroupReport gr;
            gr.group = g;
            gr.stage = t;
            gr.lambda = lambda[t];
            LloydStats last;
            double prev = std::numeric_limits<double>::infinity();
            for (std::size_t it = 0; it < config.max_iters; ++it) {
                LloydResult step = lloyd_step(points, d, cb, config.ec, lambda[t]);
                cb = std::move(step.codebook);
                last = std::move(step.stats);
                ++gr.iterations;
                if (!std::isfinite(last.objective_updated))
                    throw NumericalError("train: non-finite objective at stage " + std::to_string(t) + ", group " +
                                         std::to_string(g));
                gr.distortion_trace.push_back(last.distortion_assigned);
                if (config.ec) gr.objective_trace.push_back(last.objective_assigned);
                const double cur = last.objective_assigned;
                if (cur <= 0.0 || (std::isfinite(prev) && prev - cur <= config.rel_tol * std::abs(prev))) break;
                prev = cur;
            }
            gr.distortion_trace.push_back(last.distortion_updated);
            if (config.ec) gr.objective_trace.push_back(last.objective_updated);
            gr.usage = last.counts;

            if (!config.ec) {
                std::vector<double> smoothed(cb.size());
                for (std::size_t k = 0; k < cb.size(); ++k) smoothed[k] = static_cast<double>(last.counts[k]) + 1.0;
                cb = Codebook(d, bits, cb.vectors(), floor_and_normalize(smoothed));
            }
            for (float v : cb.vectors())
                if (!std::isfinite(v))
                    throw NumericalError("train: non-finite codeword at stage " + std::to_string(t) + ", group " +
                                         std::to_string(g));
            codebooks[g * t_max + t] = std::move(cb);
            report.groups.push_back(std::move(gr));
        }

        // Propagate r^(t) = r^(t-1) - c with the finished stage.
        const double energy = mean_energy([&](std::size_t r) {
            double e = 0.0;
            for (std::size_t i = 0; i < n_sub; ++i) {
                const Codebook& cb = codebooks[layout.group_of[i] * t_max + t];
                std::span<double> ri(residual.data() + r * m + i * d, d);
                const std::uint32_t idx = config.ec ? nearest_rate_penalized(cb, ri, lambda[t]).index
                                                    : nearest(cb, ri).index;
                const auto c = cb.codeword(idx);
                for (std::size_t j = 0; j < d; ++j) ri[j] -= static_cast<double>(c[j]);
                for (std::size_t j = 0; j < d; ++j) e += ri[j] * ri[j];
            }
            return e;
        });
        if (!std::isfinite(energy)) throw NumericalError("train: non-finite residual energy after stage " + std::to_string(t));
        report.per_stage_distortion.push_back(energy);
    }

    MsvqModel model(layout, std::move(codebooks), std::move(fallback), config.ec, lambda, config.strict);
    if (config.ec) model = with_entropy_codes(model, data);
    return {std::move(model), std::move(report)};
}

std::string TrainReport::to_json() const {
    nlohmann::ordered_json j;
    j["initial_energy"] = initial_energy;
    j["fallback_energy"] = fallback_energy;
    j["stages"] = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < per_stage_distortion.size(); ++t) {
        nlohmann::ordered_json s;
        s["stage"] = t + 1;
        s["distortion"] = per_stage_distortion[t];
        s["groups"] = nlohmann::ordered_json::array();
        for (const auto& g : groups) {
            if (g.stage != t) continue;
            nlohmann::ordered_json gj;
            gj["group"] = g.group;
            gj["iterations"] = g.iterations;
            gj["lambda"] = g.lambda;
            gj["distortion_trace"] = g.distortion_trace;
            if (!g.objective_trace.empty()) gj["objective_trace"] = g.objective_trace;
            gj["usage"] = g.usage;
            std::size_t used = 0;
            for (auto u : g.usage) used += u != 0;
            gj["codewords_used"] = used;
            s["groups"].push_back(std::move(gj));
        }
        j["stages"].push_back(std::move(s));
    }
    return j.dump(2);
}

} // namespace msvq
