#include "msvq/codebook.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "msvq/error.hpp"

namespace msvq {

std::vector<double> floor_and_normalize(std::span<const double> weights) {
    const std::size_t k = weights.size();
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw NumericalError("prior weights must be finite and >= 0");
        total += w;
    }
    std::vector<double> p(k);
    // p = eps + (1 - K eps) * w / total keeps every entry >= eps and the sum at 1.
    const double spread = 1.0 - static_cast<double>(k) * kPriorFloor;
    for (std::size_t i = 0; i < k; ++i)
        p[i] = kPriorFloor + spread * (total > 0.0 ? weights[i] / total : 1.0 / static_cast<double>(k));
    return p;
}

Codebook::Codebook(std::size_t dim, unsigned bits, std::vector<float> vectors,
                   std::vector<double> prior, std::vector<std::uint8_t> code_lengths)
    : dim_(dim), bits_(bits), vectors_(std::move(vectors)), prior_(std::move(prior)),
      code_lengths_(std::move(code_lengths)) {
    if (dim_ == 0) throw ConfigError("codebook: dimension must be positive");
    if (bits_ > 16) throw ConfigError("codebook: at most 16 bits per module");
    const std::size_t k = size();
    if (vectors_.size() != k * dim_)
        throw CorruptionError("codebook: " + std::to_string(vectors_.size()) + " values for " +
                              std::to_string(k) + " codewords of dimension " + std::to_string(dim_));
    if (prior_.empty()) prior_.assign(k, 1.0 / static_cast<double>(k));
    if (prior_.size() != k) throw CorruptionError("codebook: prior size mismatch");
    if (!code_lengths_.empty() && code_lengths_.size() != k)
        throw CorruptionError("codebook: code length table size mismatch");
    rate_.resize(k);
    prior_valid_ = true;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(prior_[i] > 0.0)) {
            prior_valid_ = false;
            rate_[i] = std::numeric_limits<double>::infinity();
        } else {
            rate_[i] = -std::log2(prior_[i]);
        }
    }
}

Codebook Codebook::with_code_lengths(std::vector<std::uint8_t> lengths) const {
    return Codebook(dim_, bits_, vectors_, prior_, std::move(lengths));
}

void Codebook::validate() const {
    for (float v : vectors_)
        if (!std::isfinite(v)) throw CorruptionError("codebook: non-finite codeword entry");
    if (!prior_valid_) throw CorruptionError("codebook: invalid prior (non-positive entry)");
    const double sum = std::accumulate(prior_.begin(), prior_.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) throw CorruptionError("codebook: prior does not sum to 1");
    if (!code_lengths_.empty()) {
        double kraft = 0.0;
        for (auto len : code_lengths_) {
            if (len < 1 || len > 32) throw CorruptionError("codebook: code length outside [1, 32]");
            kraft += std::ldexp(1.0, -static_cast<int>(len));
        }
        if (kraft > 1.0 + 1e-12) throw CorruptionError("codebook: code lengths violate Kraft inequality");
    }
}

Match nearest(const Codebook& codebook, std::span<const double> r) {
    const std::size_t k = codebook.size();
    const std::size_t d = codebook.dim();
    if (r.size() != d)
        throw ConfigError("nearest: residual has dimension " + std::to_string(r.size()) +
                          ", codebook " + std::to_string(d));
    const float* c = codebook.vectors().data();
    Match best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < k; ++i, c += d) {
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double e = r[j] - static_cast<double>(c[j]);
            dist += e * e;
        }
        if (dist < best.distortion) best = {static_cast<std::uint32_t>(i), dist};
    }
    return best;
}

RateMatch nearest_rate_penalized(const Codebook& codebook, std::span<const double> r, double lambda) {
    if (!codebook.prior_valid()) throw CorruptionError("invalid prior: codebook has a non-positive prior entry");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
    const std::size_t k = codebook.size();
    const std::size_t d = codebook.dim();
    if (r.size() != d)
        throw ConfigError("nearest_rate_penalized: residual has dimension " + std::to_string(r.size()) +
                          ", codebook " + std::to_string(d));
    const float* c = codebook.vectors().data();
    RateMatch best{0, 0.0, 0.0};
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i, c += d) {
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double e = r[j] - static_cast<double>(c[j]);
            dist += e * e;
        }
        const double cost = lambda * dist + codebook.rate_bits(i);
        if (cost < best_cost) {
            best_cost = cost;
            best = {static_cast<std::uint32_t>(i), dist, codebook.rate_bits(i)};
        }
    }
    return best;
}

} // namespace msvq
