#include "msvq/oracle.hpp"

#include <limits>
#include <string>

#include "msvq/error.hpp"
#include "msvq/parallel.hpp"
#include "msvq/quantizer.hpp"

namespace msvq::oracle {

namespace {

struct Best {
    std::vector<std::uint8_t> plan;
    double loss = std::numeric_limits<double>::infinity();
    std::uint64_t enumerated = 0;
};

// Lexicographic walk over every plan with plan[0] == first.
Best search_prefix(const MarginalLossTable& table, double b_cap, std::uint8_t first) {
    const std::size_t n = table.n;
    const std::size_t t_max = table.t_max;
    Best best;
    std::vector<std::uint8_t> plan(n, 0);
    plan[0] = first;
    while (true) {
        double bits = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < plan[i]; ++t) bits += table.step_bits[i * t_max + t];
            loss += table.loss[i * (t_max + 1) + plan[i]];
        }
        if (bits <= b_cap) {
            ++best.enumerated;
            if (loss < best.loss) {
                best.loss = loss;
                best.plan = plan;
            }
        }
        bool advanced = false;
        for (std::size_t k = n; k-- > 1;) {
            if (plan[k] < t_max) {
                ++plan[k];
                advanced = true;
                break;
            }
            plan[k] = 0;
        }
        if (!advanced) return best;
    }
}

} // namespace

OracleResult exhaustive_select(const MarginalLossTable& table, double b_cap) {
    if (table.n == 0 || table.loss.size() != table.n * (table.t_max + 1) ||
        table.step_bits.size() != table.n * table.t_max)
        throw ConfigError("oracle: malformed table");
    double plans = 1.0;
    for (std::size_t i = 0; i < table.n; ++i) plans *= static_cast<double>(table.t_max + 1);
    if (plans > static_cast<double>(kMaxPlans))
        throw SizeGuardError("oracle: " + std::to_string(table.t_max + 1) + "^" + std::to_string(table.n) +
                             " plans exceed the enumeration limit of " + std::to_string(kMaxPlans));

    std::vector<Best> parts(table.t_max + 1);
    parallel::for_chunks(parts.size(), 1, [&](std::size_t c, std::size_t, std::size_t) {
        parts[c] = search_prefix(table, b_cap, static_cast<std::uint8_t>(c));
    });

    OracleResult out;
    double best = std::numeric_limits<double>::infinity();
    for (auto& p : parts) {
        out.enumerated += p.enumerated;
        if (p.loss < best) {
            best = p.loss;
            out.best_plan = std::move(p.plan);
        }
    }
    out.best_loss = best;
    return out;
}

std::size_t exhaustive_nearest(const Codebook& codebook, std::span<const double> x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < codebook.size(); ++k) {
        const auto c = codebook.codeword(k);
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - static_cast<double>(c[j]);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

double direct_marginal_loss(const MsvqModel& model, const FeatureMatrix& data, std::size_t i, std::size_t T) {
    if (i >= model.n_sub() || T > model.t_max()) throw IndexError("oracle: (i, T) out of range");
    std::vector<std::uint8_t> stages(model.n_sub(), static_cast<std::uint8_t>(model.t_max()));
    stages[i] = static_cast<std::uint8_t>(T);
    const SelectionPlan plan = make_plan(model.layout(), std::move(stages));
    double total = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto z = data.row(r);
        total += squared_error(z, encode(model, z, plan).z_hat);
    }
    return total / static_cast<double>(data.rows());
}

} // namespace msvq::oracle
