#include "msvq/rate.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "byte_io.hpp"
#include "json.hpp"
#include "msvq/bitstream.hpp"
#include "msvq/entropy.hpp"
#include "msvq/error.hpp"
#include "msvq/parallel.hpp"

namespace msvq {

double MarginalLossTable::total_bits() const {
    return std::accumulate(step_bits.begin(), step_bits.end(), 0.0);
}

void MarginalLossTable::validate() const {
    if (n == 0 || t_max == 0) throw CorruptionError("table: empty");
    if (loss.size() != n * (t_max + 1) || step_bits.size() != n * t_max)
        throw CorruptionError("table: array sizes do not match n and t_max");
    for (double v : loss)
        if (!std::isfinite(v)) throw CorruptionError("table: non-finite loss entry");
    for (double b : step_bits)
        if (!(b > 0.0) || !std::isfinite(b)) throw CorruptionError("table: step bits must be positive and finite");
    const double full = loss_at(0, t_max);
    for (std::size_t i = 1; i < n; ++i) {
        const double v = loss_at(i, t_max);
        if (std::abs(v - full) > 1e-9 * std::max(std::abs(full), std::abs(v)))
            throw CorruptionError("table: full-depth loss differs between rows 0 and " + std::to_string(i));
    }
}

MarginalLossTable build_table(const MsvqModel& model, const FeatureMatrix& data) {
    const auto& layout = model.layout();
    if (data.cols() != layout.m_dim)
        throw DataError("build_table: data has " + std::to_string(data.cols()) + " columns, model expects " +
                        std::to_string(layout.m_dim));
    if (data.rows() == 0) throw DataError("build_table: no data rows");
    if (model.ec_enabled() && !model.has_entropy_codes())
        throw StateError("build_table: EC model has no entropy codes; average-bit table unavailable");

    const std::size_t n = layout.n_sub;
    const std::size_t t_max = layout.t_max;
    const std::size_t w = n * (t_max + 1);
    constexpr std::size_t kChunk = 512;
    std::vector<std::vector<double>> partial(parallel::chunk_count(data.rows(), kChunk));
    std::vector<double> full_partial(partial.size(), 0.0);
    parallel::for_chunks(data.rows(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        auto& acc = partial[c];
        acc.assign(w, 0.0);
        std::vector<double> err(w);
        double full = 0.0;
        for (std::size_t r = b; r < e; ++r) {
            truncation_errors(model, data.row(r), err);
            for (std::size_t q = 0; q < w; ++q) acc[q] += err[q];
            for (std::size_t i = 0; i < n; ++i) full += err[i * (t_max + 1) + t_max];
        }
        full_partial[c] = full;
    });
    std::vector<double> mean_err(w, 0.0);
    double full = 0.0;
    for (std::size_t c = 0; c < partial.size(); ++c) {
        for (std::size_t q = 0; q < w; ++q) mean_err[q] += partial[c][q];
        full += full_partial[c];
    }
    const double inv = 1.0 / static_cast<double>(data.rows());
    for (auto& v : mean_err) v *= inv;
    full *= inv;

    MarginalLossTable table;
    table.n = n;
    table.t_max = t_max;
    table.mode = model.ec_enabled() ? BitMode::average : BitMode::exact;
    table.loss.resize(w);
    for (std::size_t i = 0; i < n; ++i) {
        const double others = full - mean_err[i * (t_max + 1) + t_max];
        for (std::size_t T = 0; T <= t_max; ++T) table.loss_at(i, T) = others + mean_err[i * (t_max + 1) + T];
    }

    table.step_bits.resize(n * t_max);
    if (table.mode == BitMode::exact) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < t_max; ++t) table.bits_at(i, t) = layout.bits_at(i, t);
    } else {
        const auto counts = count_indices(model, data);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < t_max; ++t) {
                const auto& lengths = model.resolve(i, t).code_lengths();
                const auto& c = counts[i * t_max + t];
                double bits = 0.0;
                for (std::size_t k = 0; k < c.size(); ++k) bits += static_cast<double>(c[k]) * lengths[k];
                table.bits_at(i, t) = bits * inv;
            }
        }
    }
    return table;
}

SelectionPlan select_stages(const MarginalLossTable& table, double b_cap) {
    if (!(b_cap >= 0.0)) throw ConfigError("select_stages: budget must be >= 0");
    const std::size_t n = table.n;
    const std::size_t t_max = table.t_max;
    SelectionPlan plan;
    plan.stages.assign(n, 0);
    double used = 0.0;
    for (;;) {
        std::ptrdiff_t best = -1;
        double best_ratio = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t T = plan.stages[i];
            if (T >= t_max) continue;
            const double cost = table.bits_at(i, T);
            if (used + cost > b_cap) continue;
            const double ratio = (table.loss_at(i, T) - table.loss_at(i, T + 1)) / cost;
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (best < 0) break;
        const auto i = static_cast<std::size_t>(best);
        used += table.bits_at(i, plan.stages[i]);
        ++plan.stages[i];
        plan.order.push_back(static_cast<std::uint32_t>(i));
    }
    plan.avg_bits = used;
    if (table.mode == BitMode::exact) plan.exact_bits = static_cast<std::uint64_t>(std::llround(used));
    return plan;
}

SelectionPlan plan_for_model(const MsvqModel& model, const MarginalLossTable& table, double b_cap) {
    if (table.n != model.n_sub() || table.t_max != model.t_max())
        throw ConfigError("table shape (" + std::to_string(table.n) + ", " + std::to_string(table.t_max) +
                          ") does not match the model");
    SelectionPlan chosen = select_stages(table, b_cap);
    SelectionPlan plan = make_plan(model.layout(), chosen.stages);
    plan.avg_bits = chosen.avg_bits;
    plan.order = std::move(chosen.order);
    return plan;
}

double predicted_loss(const MarginalLossTable& table, std::span<const std::uint8_t> stages) {
    double v = table.loss_at(0, table.t_max);
    for (std::size_t i = 0; i < table.n; ++i) v += table.loss_at(i, stages[i]) - table.loss_at(i, table.t_max);
    return v;
}

ConvexityReport validate_convexity(const MarginalLossTable& table) {
    ConvexityReport rep;
    rep.rows.resize(table.n);
    const double b0 = table.step_bits.empty() ? 0.0 : table.step_bits.front();
    for (std::size_t i = 0; i < table.n; ++i) {
        RowShape& row = rep.rows[i];
        row.monotone = true;
        row.convex = true;
        for (std::size_t T = 0; T < table.t_max; ++T) {
            const double drop = table.loss_at(i, T) - table.loss_at(i, T + 1);
            if (!(drop > 0.0)) row.monotone = false;
            if (T + 1 < table.t_max) {
                const double next = table.loss_at(i, T + 1) - table.loss_at(i, T + 2);
                if (next > drop) row.convex = false;
            }
            if (table.bits_at(i, T) != table.bits_at(i, 0)) rep.equal_row_bits = false;
            if (table.bits_at(i, T) != b0) rep.uniform_bits = false;
        }
        rep.all_monotone = rep.all_monotone && row.monotone;
        rep.all_convex = rep.all_convex && row.convex;
    }
    return rep;
}

std::string table_to_json(const MarginalLossTable& table) {
    nlohmann::ordered_json j;
    j["format"] = "MLT1";
    j["n"] = table.n;
    j["t_max"] = table.t_max;
    j["mode"] = table.mode == BitMode::exact ? "exact" : "average";
    auto loss = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < table.n; ++i)
        loss.push_back(std::vector<double>(table.loss.begin() + static_cast<std::ptrdiff_t>(i * (table.t_max + 1)),
                                           table.loss.begin() + static_cast<std::ptrdiff_t>((i + 1) * (table.t_max + 1))));
    auto bits = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < table.n; ++i)
        bits.push_back(std::vector<double>(table.step_bits.begin() + static_cast<std::ptrdiff_t>(i * table.t_max),
                                           table.step_bits.begin() + static_cast<std::ptrdiff_t>((i + 1) * table.t_max)));
    j["loss"] = std::move(loss);
    j["step_bits"] = std::move(bits);
    return j.dump(1) + "\n";
}

MarginalLossTable table_from_json(std::string_view text) {
    MarginalLossTable t;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.contains("format") && j.at("format") != "MLT1") throw CorruptionError("table: format is not MLT1");
        t.n = j.at("n").get<std::size_t>();
        t.t_max = j.at("t_max").get<std::size_t>();
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "exact") t.mode = BitMode::exact;
        else if (mode == "average") t.mode = BitMode::average;
        else throw CorruptionError("table: unknown mode '" + mode + "'");
        const auto& loss = j.at("loss");
        const auto& bits = j.at("step_bits");
        if (!loss.is_array() || !bits.is_array() || loss.size() != t.n || bits.size() != t.n)
            throw CorruptionError("table: loss/step_bits must have n rows");
        for (const auto& row : loss) {
            if (row.size() != t.t_max + 1) throw CorruptionError("table: loss rows need t_max + 1 entries");
            for (const auto& v : row) t.loss.push_back(v.get<double>());
        }
        for (const auto& row : bits) {
            if (row.size() != t.t_max) throw CorruptionError("table: step_bits rows need t_max entries");
            for (const auto& v : row) t.step_bits.push_back(v.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("table: malformed MLT1 JSON: ") + e.what());
    }
    t.validate();
    return t;
}

std::uint64_t write_table(const std::string& path, const MarginalLossTable& table) {
    const std::string text = table_to_json(table);
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    detail::write_file(path, bytes);
    return fnv1a64(bytes);
}

LoadedTable read_table(const std::string& path) {
    const auto bytes = detail::read_file(path);
    LoadedTable out;
    out.digest = fnv1a64(bytes);
    out.table = table_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return out;
}

} // namespace msvq
