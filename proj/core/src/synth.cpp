#include "msvq/synth.hpp"

#include <cmath>
#include <random>

#include "msvq/error.hpp"

namespace msvq::synth {

FeatureMatrix gauss_iid(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    FeatureMatrix m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < dim; ++c) m(r, c) = static_cast<float>(normal(rng));
    return m;
}

FeatureMatrix gauss_corr(std::size_t rows, std::size_t dim, double rho, std::uint64_t seed) {
    if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("gauss-corr: rho must lie in (-1, 1)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double innovation = std::sqrt(1.0 - rho * rho);
    FeatureMatrix m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        double x = normal(rng);
        for (std::size_t c = 0; c < dim; ++c) {
            if (c > 0) x = rho * x + innovation * normal(rng);
            m(r, c) = static_cast<float>(x);
        }
    }
    return m;
}

FeatureMatrix gmm(std::size_t rows, std::size_t dim, std::size_t components, std::uint64_t seed) {
    if (components == 0) throw ConfigError("gmm: need at least one component");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> centres(components * dim);
    for (auto& c : centres) c = 2.0 * normal(rng);
    std::uniform_int_distribution<std::size_t> pick(0, components - 1);
    FeatureMatrix m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t k = pick(rng);
        for (std::size_t c = 0; c < dim; ++c)
            m(r, c) = static_cast<float>(centres[k * dim + c] + normal(rng));
    }
    return m;
}

} // namespace msvq::synth
