#include "msvq/quantizer.hpp"

#include <string>

#include "msvq/error.hpp"

namespace msvq {

namespace {

std::uint32_t select_index(const MsvqModel& model, const Codebook& cb, std::size_t t, std::span<const double> r) {
    return model.ec_enabled() ? nearest_rate_penalized(cb, r, model.lambda(t)).index : nearest(cb, r).index;
}

// Layout-ordered reconstruction of sub-vector i; ascending stage order.
void reconstruct_sub(const MsvqModel& model, std::size_t i, std::span<const std::uint32_t> idx,
                     std::span<double> out) {
    const std::size_t d = model.sub_dim();
    if (idx.empty()) {
        const auto mean = model.fallback_mean(i);
        for (std::size_t j = 0; j < d; ++j) out[j] = mean[j];
        return;
    }
    for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
    for (std::size_t t = 0; t < idx.size(); ++t) {
        const Codebook& cb = model.resolve(i, t);
        if (idx[t] >= cb.size())
            throw CorruptionError("decode: index " + std::to_string(idx[t]) + " outside codebook of size " +
                                  std::to_string(cb.size()) + " (sub-vector " + std::to_string(i) + ", stage " +
                                  std::to_string(t) + ")");
        const auto c = cb.codeword(idx[t]);
        for (std::size_t j = 0; j < d; ++j) out[j] += static_cast<double>(c[j]);
    }
}

} // namespace

std::size_t SelectionPlan::active_modules() const {
    std::size_t n = 0;
    for (auto s : stages) n += s;
    return n;
}

SelectionPlan make_plan(const SubVectorLayout& layout, std::vector<std::uint8_t> stages) {
    if (stages.size() != layout.n_sub)
        throw ConfigError("plan mismatch: " + std::to_string(stages.size()) + " stage counts for N = " +
                          std::to_string(layout.n_sub));
    SelectionPlan plan;
    plan.stages = std::move(stages);
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        if (plan.stages[i] > layout.t_max)
            throw ConfigError("plan mismatch: sub-vector " + std::to_string(i) + " has " +
                              std::to_string(plan.stages[i]) + " stages, T_max = " + std::to_string(layout.t_max));
        for (std::size_t t = 0; t < plan.stages[i]; ++t) plan.exact_bits += layout.bits_at(i, t);
    }
    plan.avg_bits = static_cast<double>(plan.exact_bits);
    return plan;
}

SelectionPlan full_plan(const SubVectorLayout& layout) {
    return make_plan(layout, std::vector<std::uint8_t>(layout.n_sub, static_cast<std::uint8_t>(layout.t_max)));
}

void validate_plan(const SubVectorLayout& layout, const SelectionPlan& plan) {
    const SelectionPlan expect = make_plan(layout, plan.stages);
    if (expect.exact_bits != plan.exact_bits)
        throw CorruptionError("plan bit count " + std::to_string(plan.exact_bits) + " disagrees with layout (" +
                              std::to_string(expect.exact_bits) + ")");
}

EncodeResult encode(const MsvqModel& model, std::span<const float> z, const SelectionPlan& plan) {
    const SubVectorLayout& layout = model.layout();
    if (z.size() != layout.m_dim)
        throw DataError("encode: vector has " + std::to_string(z.size()) + " entries, model expects " +
                        std::to_string(layout.m_dim));
    validate_plan(layout, plan);
    const std::size_t d = layout.sub_dim;
    std::vector<double> x(layout.m_dim);
    layout.gather(z, x);

    EncodeResult res;
    res.encoded.plan = plan;
    res.encoded.indices.resize(layout.n_sub);
    std::vector<double> r(d);
    std::vector<double> y(layout.m_dim);
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        std::copy_n(x.data() + i * d, d, r.data());
        auto& idx = res.encoded.indices[i];
        idx.reserve(plan.stages[i]);
        for (std::size_t t = 0; t < plan.stages[i]; ++t) {
            const Codebook& cb = model.resolve(i, t);
            const std::uint32_t k = select_index(model, cb, t, r);
            idx.push_back(k);
            const auto c = cb.codeword(k);
            for (std::size_t j = 0; j < d; ++j) r[j] -= static_cast<double>(c[j]);
        }
        reconstruct_sub(model, i, idx, {y.data() + i * d, d});
    }
    res.z_hat.resize(layout.m_dim);
    layout.scatter(y, res.z_hat);
    return res;
}

std::vector<double> decode(const MsvqModel& model, const EncodedFeature& encoded) {
    const SubVectorLayout& layout = model.layout();
    validate_plan(layout, encoded.plan);
    if (encoded.indices.size() != layout.n_sub) throw CorruptionError("decode: index table has wrong length");
    const std::size_t d = layout.sub_dim;
    std::vector<double> y(layout.m_dim);
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        if (encoded.indices[i].size() != encoded.plan.stages[i])
            throw CorruptionError("decode: sub-vector " + std::to_string(i) + " carries " +
                                  std::to_string(encoded.indices[i].size()) + " indices, plan says " +
                                  std::to_string(encoded.plan.stages[i]));
        reconstruct_sub(model, i, encoded.indices[i], {y.data() + i * d, d});
    }
    std::vector<double> z_hat(layout.m_dim);
    layout.scatter(y, z_hat);
    return z_hat;
}

void truncation_errors(const MsvqModel& model, std::span<const float> z, std::span<double> out) {
    const SubVectorLayout& layout = model.layout();
    const std::size_t d = layout.sub_dim;
    const std::size_t t_max = layout.t_max;
    std::vector<double> x(layout.m_dim);
    layout.gather(z, x);
    std::vector<double> r(d), acc(d);
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        const double* xi = x.data() + i * d;
        std::copy_n(xi, d, r.data());
        std::fill(acc.begin(), acc.end(), 0.0);
        const auto mean = model.fallback_mean(i);
        double e0 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = xi[j] - static_cast<double>(mean[j]);
            e0 += v * v;
        }
        out[i * (t_max + 1)] = e0;
        for (std::size_t t = 0; t < t_max; ++t) {
            const Codebook& cb = model.resolve(i, t);
            const std::uint32_t k = select_index(model, cb, t, r);
            const auto c = cb.codeword(k);
            double e = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                r[j] -= static_cast<double>(c[j]);
                acc[j] += static_cast<double>(c[j]);
                const double v = xi[j] - acc[j];
                e += v * v;
            }
            out[i * (t_max + 1) + t + 1] = e;
        }
    }
}

void full_indices(const MsvqModel& model, std::span<const float> z, std::span<std::uint32_t> out) {
    const SubVectorLayout& layout = model.layout();
    const std::size_t d = layout.sub_dim;
    const std::size_t t_max = layout.t_max;
    std::vector<double> x(layout.m_dim);
    layout.gather(z, x);
    std::vector<double> r(d);
    for (std::size_t i = 0; i < layout.n_sub; ++i) {
        std::copy_n(x.data() + i * d, d, r.data());
        for (std::size_t t = 0; t < t_max; ++t) {
            const Codebook& cb = model.resolve(i, t);
            const std::uint32_t k = select_index(model, cb, t, r);
            out[i * t_max + t] = k;
            const auto c = cb.codeword(k);
            for (std::size_t j = 0; j < d; ++j) r[j] -= static_cast<double>(c[j]);
        }
    }
}

double squared_error(std::span<const float> z, std::span<const double> z_hat) {
    double e = 0.0;
    for (std::size_t p = 0; p < z.size(); ++p) {
        const double v = static_cast<double>(z[p]) - z_hat[p];
        e += v * v;
    }
    return e;
}

} // namespace msvq
