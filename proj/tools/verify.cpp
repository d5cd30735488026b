#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "msvq/bitstream.hpp"
#include "msvq/codebook.hpp"
#include "msvq/oracle.hpp"
#include "msvq/quantizer.hpp"

namespace msvq::tools {

namespace {

struct Line {
    std::ostream& out;
    std::size_t failures = 0;

    void report(bool ok, const std::string& name, const std::string& detail) {
        out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        if (!ok) ++failures;
    }
    void info(const std::string& name, const std::string& detail) { out << "INFO " << name << ": " << detail << '\n'; }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); }

MarginalLossTable first_rows(const MarginalLossTable& table, std::size_t n) {
    MarginalLossTable sub;
    sub.n = n;
    sub.t_max = table.t_max;
    sub.mode = table.mode;
    sub.loss.assign(table.loss.begin(), table.loss.begin() + static_cast<std::ptrdiff_t>(n * (table.t_max + 1)));
    sub.step_bits.assign(table.step_bits.begin(), table.step_bits.begin() + static_cast<std::ptrdiff_t>(n * table.t_max));
    return sub;
}

double plan_loss(const MarginalLossTable& table, const std::vector<std::uint8_t>& stages) {
    double s = 0.0;
    for (std::size_t i = 0; i < table.n; ++i) s += table.loss_at(i, stages[i]);
    return s;
}

} // namespace

std::size_t run_verify(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                       const VerifyOptions& options, std::ostream& out) {
    Line line{out};
    const FeatureMatrix subset = data.head(options.direct_rows);

    {
        const bool ok = table.n == model.n_sub() && table.t_max == model.t_max();
        line.report(ok, "table-shape", "table " + std::to_string(table.n) + "x" + std::to_string(table.t_max) +
                                           ", model " + std::to_string(model.n_sub()) + "x" +
                                           std::to_string(model.t_max()));
        if (!ok) return line.failures;
    }

    {
        const MarginalLossTable fast = build_table(model, subset);
        double worst = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < model.n_sub(); ++i) {
            for (std::size_t T = 0; T <= model.t_max(); ++T) {
                const double direct = oracle::direct_marginal_loss(model, subset, i, T);
                const double f = fast.loss_at(i, T);
                worst = std::max(worst, std::abs(f - direct) / std::max(1e-300, std::abs(direct)));
                ok = ok && close_rel(f, direct, 1e-9);
            }
        }
        line.report(ok, "table-fast-path", fmt("max relative deviation from direct evaluation %.3g over %g rows", worst,
                                                static_cast<double>(subset.rows())));
    }

    {
        std::size_t checked = 0, mismatched = 0;
        std::vector<double> x(model.sub_dim());
        for (std::size_t r = 0; r < subset.rows(); ++r) {
            const auto z = subset.row(r);
            for (std::size_t i = 0; i < model.n_sub(); ++i) {
                for (std::size_t d = 0; d < model.sub_dim(); ++d)
                    x[d] = static_cast<double>(z[model.layout().perm[i * model.sub_dim() + d]]);
                for (std::size_t t = 0; t < model.t_max(); ++t) {
                    const auto& cb = model.resolve(i, t);
                    ++checked;
                    if (nearest(cb, x).index != oracle::exhaustive_nearest(cb, x)) ++mismatched;
                }
            }
        }
        line.report(mismatched == 0, "nearest-exhaustive",
                    std::to_string(mismatched) + " mismatches in " + std::to_string(checked) + " searches");
    }

    {
        const std::size_t n = std::min(options.max_n, table.n);
        std::size_t nn = n;
        while (nn > 0) {
            double plans = 1.0;
            for (std::size_t k = 0; k < nn; ++k) plans *= static_cast<double>(table.t_max + 1);
            if (plans <= static_cast<double>(oracle::kMaxPlans)) break;
            --nn;
        }
        const MarginalLossTable sub = first_rows(table, nn);
        const ConvexityReport shape = validate_convexity(sub);
        const bool optimal_regime = shape.all_monotone && shape.all_convex && shape.uniform_bits;
        const double total = sub.total_bits();
        std::size_t equal = 0;
        double worst_gap = 0.0;
        for (std::size_t k = 0; k < options.budgets; ++k) {
            const double b = options.budgets > 1 ? total * static_cast<double>(k) / static_cast<double>(options.budgets - 1) : total;
            const SelectionPlan greedy = select_stages(sub, b);
            const oracle::OracleResult best = oracle::exhaustive_select(sub, b);
            const double g = plan_loss(sub, greedy.stages);
            if (g == best.best_loss) ++equal;
            if (best.best_loss != 0.0) worst_gap = std::max(worst_gap, (g - best.best_loss) / std::abs(best.best_loss));
        }
        const std::string detail = std::to_string(equal) + "/" + std::to_string(options.budgets) +
                                   " budgets optimal on the first " + std::to_string(nn) +
                                   " sub-vectors, worst relative gap " + fmt("%.4g", worst_gap);
        if (optimal_regime)
            line.report(equal == options.budgets, "greedy-oracle", detail);
        else
            line.info("greedy-oracle", detail + " (equal-step convexity does not hold; gap reported only)");
    }

    {
        bool ok = true;
        std::string detail;
        for (double frac : {0.25, 0.5, 1.0}) {
            EncodeOptions opt;
            opt.b_cap = static_cast<std::uint32_t>(std::floor(table.total_bits() * frac));
            opt.strict = model.strict_default();
            const TransmitResult tx = transmit(model, table, subset, opt);
            const ReceiveResult rx = receive(model, table, tx.payload);
            std::size_t diff = 0;
            for (std::size_t r = 0; r < subset.rows(); ++r)
                if (rx.z_hat[r] != tx.z_hat[r] || rx.payload.vectors[r] != tx.encoded[r]) ++diff;
            ok = ok && diff == 0;
            detail += (detail.empty() ? "" : ", ") + std::string("b_cap ") + std::to_string(opt.b_cap) + ": " +
                      std::to_string(diff) + " mismatches";
        }
        line.report(ok, "round-trip", detail);
    }

    {
        const ConvexityReport shape = validate_convexity(table);
        std::size_t convex = 0, monotone = 0;
        for (const auto& r : shape.rows) {
            convex += r.convex;
            monotone += r.monotone;
        }
        line.info("table-shape", std::to_string(monotone) + "/" + std::to_string(table.n) + " rows monotone, " +
                                     std::to_string(convex) + "/" + std::to_string(table.n) + " convex");
    }
    return line.failures;
}

} // namespace msvq::tools
