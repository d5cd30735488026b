// msvq: command-line front end for the multi-stage VQ codec.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "msvq/bitstream.hpp"
#include "msvq/entropy.hpp"
#include "msvq/error.hpp"
#include "msvq/feature_matrix.hpp"
#include "msvq/layout.hpp"
#include "msvq/parallel.hpp"
#include "msvq/rate.hpp"
#include "msvq/sweep.hpp"
#include "msvq/synth.hpp"
#include "msvq/trainer.hpp"
#include "verify.hpp"

using namespace msvq;
using nlohmann::ordered_json;

namespace {

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), {}};
}

void spill(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

std::vector<double> parse_lambda(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--lambda: '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError("--lambda: empty list");
    return out;
}

BitMatrix read_alloc_file(const std::string& path, std::size_t n_sub, std::size_t t_max) {
    const auto bytes = slurp(path);
    ordered_json j;
    try {
        j = ordered_json::parse(bytes.begin(), bytes.end());
    } catch (const std::exception& e) {
        throw ConfigError("allocation file '" + path + "': " + e.what());
    }
    const auto& rows = j.contains("bits") ? j["bits"] : j;
    if (!rows.is_array() || rows.size() != n_sub)
        throw ConfigError("allocation file: expected " + std::to_string(n_sub) + " rows of bits");
    BitMatrix bits(n_sub, t_max);
    for (std::size_t i = 0; i < n_sub; ++i) {
        if (!rows[i].is_array() || rows[i].size() != t_max)
            throw ConfigError("allocation file: row " + std::to_string(i) + " must hold " + std::to_string(t_max) + " entries");
        for (std::size_t t = 0; t < t_max; ++t) {
            if (!rows[i][t].is_number_unsigned()) throw ConfigError("allocation file: bits must be positive integers");
            const auto v = rows[i][t].get<std::uint64_t>();
            if (v > 255) throw ConfigError("allocation file: bits out of range");
            bits.at(i, t) = static_cast<std::uint8_t>(v);
        }
    }
    return bits;
}

struct Bound {
    MsvqModel model;
    LoadedTable table;
};

Bound load_bound(const std::string& model_path, const std::string& table_path) {
    Bound b{read_model(model_path), read_table(table_path)};
    require_table_binding(b.model, b.table.digest);
    return b;
}

ordered_json convexity_json(const ConvexityReport& r) {
    ordered_json rows = ordered_json::array();
    std::size_t monotone = 0, convex = 0;
    for (const auto& row : r.rows) {
        rows.push_back({{"monotone", row.monotone}, {"convex", row.convex}});
        monotone += row.monotone;
        convex += row.convex;
    }
    return {{"rows_monotone", monotone}, {"rows_convex", convex},         {"all_monotone", r.all_monotone},
            {"all_convex", r.all_convex}, {"equal_row_bits", r.equal_row_bits}, {"uniform_bits", r.uniform_bits},
            {"rows", rows}};
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ordered_json model_info(const MsvqModel& m) {
    const auto& l = m.layout();
    ordered_json bits = ordered_json::array();
    for (std::size_t i = 0; i < l.n_sub; ++i) {
        auto row = ordered_json::array();
        for (std::size_t t = 0; t < l.t_max; ++t) row.push_back(l.bits_at(i, t));
        bits.push_back(row);
    }
    return {{"format", "MSVQ"},
            {"m", l.m_dim},
            {"sub_dim", l.sub_dim},
            {"n_sub", l.n_sub},
            {"groups", l.n_groups},
            {"t_max", l.t_max},
            {"ec", m.ec_enabled()},
            {"strict", m.strict_default()},
            {"entropy_codes", m.has_entropy_codes()},
            {"lambda", m.lambdas()},
            {"total_bits", l.total_bits()},
            {"codeword_parameters", m.codeword_parameter_count()},
            {"digest", hex64(model_digest(m))},
            {"table_digest", hex64(m.table_digest())},
            {"bits", bits}};
}

const char* mode_name(PlanMode m) {
    switch (m) {
        case PlanMode::derived: return "derived";
        case PlanMode::explicit_global: return "explicit-global";
        case PlanMode::explicit_per_vector: return "explicit-per-vector";
    }
    return "?";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate-adaptive multi-stage vector quantization codec"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)")->envname("MSVQ_THREADS");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate synthetic FMAT1 feature data");
    std::string dist = "gauss-iid", gen_out;
    double rho = 0.9;
    std::size_t components = 8, rows = 4096, dim = 64;
    std::uint64_t gen_seed = 0;
    gen->add_option("--dist", dist)->check(CLI::IsMember({"gauss-iid", "gauss-corr", "gmm"}));
    gen->add_option("--rho", rho, "AR(1) correlation for gauss-corr");
    gen->add_option("--components", components, "Mixture components for gmm");
    gen->add_option("--rows", rows);
    gen->add_option("--dim", dim);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "Fit layout and codebooks, write an MSVQ model");
    std::string tr_data, tr_out, alloc = "type3", alloc_file, lambda_text = "1";
    std::size_t sub_dim = 4, t_max = 3, groups = 0;
    TrainConfig tc;
    tr->add_option("--data", tr_data)->required();
    tr->add_option("--sub-dim", sub_dim);
    tr->add_option("--t-max", t_max);
    tr->add_option("--groups", groups, "Shared-codebook groups (0 = one per sub-vector)");
    tr->add_option("--alloc", alloc, "type1 | type2 | type3 | file");
    tr->add_option("--alloc-file", alloc_file, "JSON {\"bits\": [[...], ...]} for --alloc file");
    tr->add_flag("--ec", tc.ec, "Entropy-constrained training");
    tr->add_option("--lambda", lambda_text, "Per-stage weights l1,l2,...");
    tr->add_flag("--normalize-lambda", tc.normalize_lambda, "Scale lambda by the stage residual variance");
    tr->add_flag("--strict", tc.strict, "Default to strict instantaneous budgets when encoding");
    tr->add_option("--max-iters", tc.max_iters);
    tr->add_option("--tol", tc.rel_tol);
    tr->add_option("--seed", tc.seed);
    tr->add_option("--out", tr_out)->required();

    // table
    auto* tb = app.add_subcommand("table", "Build the marginal-loss table and bind it to the model");
    std::string tb_model, tb_data, tb_out, tb_import;
    tb->add_option("--model", tb_model)->required();
    tb->add_option("--data", tb_data);
    tb->add_option("--out", tb_out);
    tb->add_option("--import", tb_import, "Bind an externally built MLT1 table instead");

    // encode
    auto* en = app.add_subcommand("encode", "Quantize features into an MSVP payload");
    std::string en_model, en_table, en_data, en_out, plan_mode = "derived";
    std::uint32_t en_cap = 0;
    bool en_strict = false;
    en->add_option("--model", en_model)->required();
    en->add_option("--table", en_table)->required();
    en->add_option("--data", en_data)->required();
    en->add_option("--b-cap", en_cap)->required();
    en->add_flag("--strict", en_strict, "EC: cap realized bits per vector at b_cap");
    en->add_option("--plan-mode", plan_mode)->check(CLI::IsMember({"derived", "global", "per-vector"}));
    en->add_option("--out", en_out)->required();

    // decode
    auto* de = app.add_subcommand("decode", "Reconstruct features from an MSVP payload");
    std::string de_model, de_table, de_payload, de_out;
    de->add_option("--model", de_model)->required();
    de->add_option("--table", de_table)->required();
    de->add_option("--payload", de_payload)->required();
    de->add_option("--out", de_out)->required();

    // sweep
    auto* sw = app.add_subcommand("sweep", "Rate-distortion sweep over a budget grid");
    std::string sw_model, sw_table, sw_data, sw_grid, sw_out, sw_plot;
    sw->add_option("--model", sw_model)->required();
    sw->add_option("--table", sw_table)->required();
    sw->add_option("--data", sw_data)->required();
    sw->add_option("--b-cap-grid", sw_grid, "lo:hi:step")->required();
    sw->add_option("--out", sw_out)->required();
    sw->add_option("--plot", sw_plot, "Also write an SVG curve");

    // verify
    auto* ve = app.add_subcommand("verify", "Cross-check the codec against brute-force oracles");
    std::string ve_model, ve_table, ve_data;
    tools::VerifyOptions vo;
    ve->add_option("--model", ve_model)->required();
    ve->add_option("--table", ve_table)->required();
    ve->add_option("--data", ve_data)->required();
    ve->add_option("--max-n", vo.max_n);
    ve->add_option("--rows", vo.direct_rows, "Rows used by direct evaluation");

    // info
    auto* in = app.add_subcommand("info", "Print model or payload headers");
    std::string in_path, in_model;
    in->add_option("file", in_path)->required();
    in->add_option("--model", in_model, "Model for decoding a payload's plan summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        parallel::set_max_threads(threads);

        if (*gen) {
            FeatureMatrix m;
            if (dist == "gauss-iid")
                m = synth::gauss_iid(rows, dim, gen_seed);
            else if (dist == "gauss-corr")
                m = synth::gauss_corr(rows, dim, rho, gen_seed);
            else
                m = synth::gmm(rows, dim, components, gen_seed);
            write_fmat(gen_out, m);
            std::cout << "wrote " << m.rows() << "x" << m.cols() << " " << dist << " to " << gen_out << "\n";
        } else if (*tr) {
            const FeatureMatrix data = read_fmat(tr_data);
            data.require_finite();
            if (sub_dim == 0 || data.cols() % sub_dim != 0)
                throw ConfigError("--sub-dim must divide the feature width " + std::to_string(data.cols()));
            const std::size_t n_sub = data.cols() / sub_dim;
            Allocation a;
            a.preset = parse_preset(alloc);
            if (a.preset == AllocationPreset::custom) {
                if (alloc_file.empty()) throw ConfigError("--alloc file needs --alloc-file");
                a.custom = read_alloc_file(alloc_file, n_sub, t_max);
            }
            tc.lambda = parse_lambda(lambda_text);
            const SubVectorLayout layout =
                build_layout(compute_stats(data), sub_dim, t_max, groups == 0 ? n_sub : groups, a);
            const TrainResult res = train(data, layout, tc);
            write_model(tr_out, res.model);
            std::cout << res.report.to_json() << "\n";
        } else if (*tb) {
            const MsvqModel model = read_model(tb_model);
            MarginalLossTable table;
            std::uint64_t digest = 0;
            if (!tb_import.empty()) {
                LoadedTable lt = read_table(tb_import);
                if (lt.table.n != model.n_sub() || lt.table.t_max != model.t_max())
                    throw ConfigError("imported table shape does not match the model");
                table = std::move(lt.table);
                digest = lt.digest;
            } else {
                if (tb_data.empty() || tb_out.empty()) throw ConfigError("table needs --data and --out (or --import)");
                table = build_table(model, read_fmat(tb_data));
                digest = write_table(tb_out, table);
            }
            write_model(tb_model, model.with_table_digest(digest));
            ordered_json j = convexity_json(validate_convexity(table));
            j["table_digest"] = hex64(digest);
            std::cout << j.dump(2) << "\n";
        } else if (*en) {
            const Bound b = load_bound(en_model, en_table);
            const FeatureMatrix data = read_fmat(en_data);
            EncodeOptions opt;
            opt.b_cap = en_cap;
            opt.strict = en_strict || b.model.strict_default();
            opt.mode = plan_mode == "global"       ? PlanMode::explicit_global
                       : plan_mode == "per-vector" ? PlanMode::explicit_per_vector
                                                   : PlanMode::derived;
            const TransmitResult tx = transmit(b.model, b.table.table, data, opt);
            spill(en_out, tx.payload);
            double index_bits = 0.0;
            for (auto v : tx.index_bits) index_bits += static_cast<double>(v);
            ordered_json j{{"vectors", data.rows()},
                           {"b_cap", en_cap},
                           {"plan", tx.plan.stages},
                           {"plan_bits", tx.plan.avg_bits},
                           {"exact_bits", tx.plan.exact_bits},
                           {"mean_index_bits", data.rows() ? index_bits / static_cast<double>(data.rows()) : 0.0},
                           {"payload_bytes", tx.payload.size()},
                           {"strict_retractions", tx.strict_retractions}};
            std::cout << j.dump(2) << "\n";
        } else if (*de) {
            const Bound b = load_bound(de_model, de_table);
            const auto bytes = slurp(de_payload);
            const ReceiveResult rx = receive(b.model, b.table.table, bytes);
            FeatureMatrix out(rx.z_hat.size(), b.model.layout().m_dim);
            for (std::size_t r = 0; r < rx.z_hat.size(); ++r)
                for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = static_cast<float>(rx.z_hat[r][c]);
            write_fmat(de_out, out);
            std::cout << "decoded " << out.rows() << " vectors to " << de_out << "\n";
        } else if (*sw) {
            const Bound b = load_bound(sw_model, sw_table);
            const FeatureMatrix data = read_fmat(sw_data);
            const SweepReport report = run_sweep(b.model, b.table.table, data, parse_budget_grid(sw_grid));
            std::ofstream csv(sw_out);
            if (!csv) throw ConfigError("cannot write '" + sw_out + "'");
            write_csv(csv, report);
            if (!sw_plot.empty()) {
                std::ofstream svg(sw_plot);
                if (!svg) throw ConfigError("cannot write '" + sw_plot + "'");
                write_svg(svg, report);
            }
            write_csv(std::cout, report);
        } else if (*ve) {
            const Bound b = load_bound(ve_model, ve_table);
            const FeatureMatrix data = read_fmat(ve_data);
            const std::size_t failures = tools::run_verify(b.model, b.table.table, data, vo, std::cout);
            return failures == 0 ? 0 : 1;
        } else if (*in) {
            const auto bytes = slurp(in_path);
            if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "MSVQ") {
                std::cout << model_info(model_from_bytes(bytes)).dump(2) << "\n";
            } else if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "MSVP") {
                const PayloadHeader h = read_payload_header(bytes);
                ordered_json j{{"format", "MSVP"},          {"version", h.version},
                               {"ec", h.ec},                {"plan_mode", mode_name(h.mode)},
                               {"model_digest", hex64(h.model_digest)}, {"b_cap", h.b_cap},
                               {"count", h.count},          {"bytes", bytes.size()}};
                if (!in_model.empty()) j["model_matches"] = model_digest(read_model(in_model)) == h.model_digest;
                std::cout << j.dump(2) << "\n";
            } else if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "FMAT") {
                const FeatureMatrix m = fmat_from_bytes(bytes);
                std::cout << ordered_json{{"format", "FMAT1"}, {"rows", m.rows()}, {"cols", m.cols()}}.dump(2) << "\n";
            } else {
                throw CorruptionError("'" + in_path + "' is not an MSVQ model, MSVP payload or FMAT1 file");
            }
        }
    } catch (const Error& e) {
        std::cerr << "msvq: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "msvq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
