#include <benchmark/benchmark.h>

#include <random>

#include "msvq/bitstream.hpp"
#include "msvq/entropy.hpp"
#include "msvq/layout.hpp"
#include "msvq/quantizer.hpp"
#include "msvq/rate.hpp"
#include "msvq/synth.hpp"
#include "msvq/trainer.hpp"

namespace {

using namespace msvq;

struct Fixture {
    FeatureMatrix data;
    MsvqModel model;
    MarginalLossTable table;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture x;
        x.data = synth::gauss_corr(4096, 64, 0.9, 7);
        const auto layout = build_layout(compute_stats(x.data), 4, 3, 16, {AllocationPreset::type3, {}});
        TrainConfig cfg;
        cfg.max_iters = 10;
        x.model = train(x.data, layout, cfg).model;
        x.table = build_table(x.model, x.data);
        return x;
    }();
    return f;
}

void BM_Nearest(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const Codebook& cb = fixture().model.codebook(0, 0);
    std::vector<double> r(cb.dim());
    for (auto& v : r) v = std::normal_distribution<double>()(rng);
    for (auto _ : state) benchmark::DoNotOptimize(nearest(cb, r));
}
BENCHMARK(BM_Nearest);

void BM_EncodeFullDepth(benchmark::State& state) {
    const auto& f = fixture();
    const auto plan = full_plan(f.model.layout());
    std::size_t r = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(f.model, f.data.row(r), plan));
        r = (r + 1) % f.data.rows();
    }
}
BENCHMARK(BM_EncodeFullDepth);

void BM_SelectStages(benchmark::State& state) {
    const auto& t = fixture().table;
    const double cap = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(select_stages(t, cap));
}
BENCHMARK(BM_SelectStages)->Arg(48)->Arg(144)->Arg(288);

void BM_TransmitBatch(benchmark::State& state) {
    const auto& f = fixture();
    const auto cap = static_cast<std::uint32_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(transmit(f.model, f.table, f.data, {cap, false, PlanMode::derived}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.rows()));
}
BENCHMARK(BM_TransmitBatch)->Arg(144)->Unit(benchmark::kMillisecond);

void BM_HuffmanBuild(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<double> pmf(static_cast<std::size_t>(state.range(0)));
    for (auto& p : pmf) p = std::exponential_distribution<double>()(rng);
    for (auto _ : state) benchmark::DoNotOptimize(build_code(pmf));
}
BENCHMARK(BM_HuffmanBuild)->Arg(64)->Arg(4096);

void BM_HuffmanDecode(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<double> pmf(256);
    for (auto& p : pmf) p = std::exponential_distribution<double>()(rng);
    const auto code = build_code(pmf);
    std::discrete_distribution<std::uint32_t> pick(pmf.begin(), pmf.end());
    BitWriter w;
    for (int k = 0; k < 4096; ++k) code.write(w, pick(rng));
    const auto bytes = w.take();
    for (auto _ : state) {
        BitReader r(bytes);
        for (int k = 0; k < 4096; ++k) benchmark::DoNotOptimize(code.read(r));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_HuffmanDecode);

} // namespace
BENCHMARK_MAIN();
