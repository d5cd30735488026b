#include "support.hpp"

#include "msvq/synth.hpp"

namespace msvq::test {

Trained small_model(std::size_t rows, std::size_t m, std::size_t d, std::size_t t_max, unsigned bits,
                    std::uint64_t seed, bool ec, std::size_t groups) {
    Trained out;
    out.data = synth::gauss_corr(rows, m, 0.8, seed);
    Allocation a;
    a.preset = AllocationPreset::custom;
    a.custom = BitMatrix(m / d, t_max, static_cast<std::uint8_t>(bits));
    const auto layout = build_layout(compute_stats(out.data), d, t_max, groups == 0 ? m / d : groups, a);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_iters = 20;
    cfg.ec = ec;
    cfg.lambda = {4.0};
    cfg.normalize_lambda = ec;
    auto res = train(out.data, layout, cfg);
    out.model = std::move(res.model);
    out.report = std::move(res.report);
    return out;
}

MarginalLossTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t t_max, bool convex,
                               StepBits shape, unsigned max_bits) {
    MarginalLossTable t;
    t.n = n;
    t.t_max = t_max;
    t.loss.resize(n * (t_max + 1));
    t.step_bits.resize(n * t_max);
    std::uniform_int_distribution<int> drop(1, 100);
    std::uniform_int_distribution<unsigned> bits(1, max_bits);
    const double floor_loss = 1 + drop(rng);
    const unsigned shared_bits = bits(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> d(t_max);
        for (auto& x : d) x = drop(rng);
        if (convex) std::sort(d.begin(), d.end(), std::greater<>());
        double v = floor_loss;
        t.loss_at(i, t_max) = v;
        for (std::size_t T = t_max; T-- > 0;) {
            v += d[T];
            t.loss_at(i, T) = v;
        }
        const unsigned row_bits = bits(rng);
        for (std::size_t s = 0; s < t_max; ++s)
            t.bits_at(i, s) = shape == StepBits::uniform ? shared_bits : shape == StepBits::per_row ? row_bits : bits(rng);
    }
    return t;
}

} // namespace msvq::test
