#include "msvq/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <limits>

#include "msvq/bitstream.hpp"
#include "msvq/error.hpp"
#include "msvq/quantizer.hpp"

namespace msvq {

std::vector<std::uint32_t> budget_grid(std::uint32_t lo, std::uint32_t hi, std::uint32_t step) {
    if (step == 0) throw ConfigError("budget grid: step must be positive");
    if (lo > hi) throw ConfigError("budget grid: lo exceeds hi");
    std::vector<std::uint32_t> out;
    for (std::uint64_t b = lo; b <= hi; b += step) out.push_back(static_cast<std::uint32_t>(b));
    return out;
}

std::vector<std::uint32_t> parse_budget_grid(const std::string& spec) {
    std::uint32_t v[3] = {};
    const char* p = spec.data();
    const char* end = spec.data() + spec.size();
    for (int k = 0; k < 3; ++k) {
        auto [next, ec] = std::from_chars(p, end, v[k]);
        if (ec != std::errc{} || (k < 2 && (next == end || *next != ':')) || (k == 2 && next != end))
            throw ConfigError("budget grid: expected lo:hi:step, got '" + spec + "'");
        p = next + 1;
    }
    return budget_grid(v[0], v[1], v[2]);
}

SweepReport run_sweep(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                      std::vector<std::uint32_t> budgets) {
    if (data.rows() == 0) throw DataError("sweep: no data rows");
    std::sort(budgets.begin(), budgets.end());
    SweepReport report;
    for (auto b : budgets) {
        const auto start = std::chrono::steady_clock::now();
        EncodeOptions options;
        options.b_cap = b;
        options.strict = model.strict_default();
        const TransmitResult tx = transmit(model, table, data, options);
        const ReceiveResult rx = receive(model, table, tx.payload);

        SweepRow row;
        row.b_cap = b;
        for (std::size_t i = 0; i < tx.plan.stages.size(); ++i) {
            if (i) row.stages += '-';
            row.stages += std::to_string(tx.plan.stages[i]);
        }
        row.active_modules = tx.plan.active_modules();
        row.plan_bits = tx.plan.avg_bits;
        row.predicted_loss = predicted_loss(table, tx.plan.stages);
        double err = 0.0;
        double index_bits = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            err += squared_error(data.row(r), rx.z_hat[r]);
            index_bits += static_cast<double>(tx.index_bits[r]);
        }
        const double n = static_cast<double>(data.rows());
        row.measured_mse = err / n;
        row.mean_index_bits = index_bits / n;
        row.mean_payload_bits = static_cast<double>(tx.payload.size() - kPayloadHeaderBytes) * 8.0 / n;
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_csv(std::ostream& out, const SweepReport& report) {
    out << "b_cap,stages,active_modules,plan_bits,predicted_loss,measured_mse,mean_payload_bits,mean_index_bits,"
           "wall_ms\n";
    for (const auto& r : report.rows) {
        out << r.b_cap << ',' << r.stages << ',' << r.active_modules << ',' << num(r.plan_bits) << ','
            << num(r.predicted_loss) << ',' << num(r.measured_mse) << ',' << num(r.mean_payload_bits) << ','
            << num(r.mean_index_bits) << ',' << num(r.wall_ms) << '\n';
    }
}

void write_svg(std::ostream& out, const SweepReport& report) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 20, B = 50;
    double x_max = 1.0, y_max = 0.0;
    for (const auto& r : report.rows) {
        x_max = std::max(x_max, r.mean_payload_bits);
        y_max = std::max(y_max, r.measured_mse);
    }
    if (y_max <= 0.0) y_max = 1.0;
    auto px = [&](double x) { return L + (W - L - R) * x / x_max; };
    auto py = [&](double y) { return H - B - (H - T - B) * y / y_max; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">payload bits per vector</text>\n";
    out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
        << ")\">MSE</text>\n";
    out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">0</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << num(x_max) << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << num(y_max) << "</text>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& r : report.rows) out << px(r.mean_payload_bits) << ',' << py(r.measured_mse) << ' ';
    out << "\"/>\n";
    for (const auto& r : report.rows)
        out << "<circle cx=\"" << px(r.mean_payload_bits) << "\" cy=\"" << py(r.measured_mse) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    out << "</svg>\n";
}

} // namespace msvq
