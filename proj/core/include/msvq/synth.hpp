#pragma once

#include <cstdint>

#include "msvq/feature_matrix.hpp"

namespace msvq::synth {

/// i.i.d. standard normal entries.
FeatureMatrix gauss_iid(std::size_t rows, std::size_t dim, std::uint64_t seed);

/// Unit-variance AR(1) process along the coordinate axis:
/// x[0] ~ N(0,1), x[m] = rho * x[m-1] + sqrt(1 - rho^2) * e[m].
FeatureMatrix gauss_corr(std::size_t rows, std::size_t dim, double rho, std::uint64_t seed);

/// Isotropic Gaussian mixture: component centres drawn from N(0, 4 I), unit
/// within-component variance, equal weights.
FeatureMatrix gmm(std::size_t rows, std::size_t dim, std::size_t components, std::uint64_t seed);

} // namespace msvq::synth
