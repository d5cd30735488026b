#include "msvq/bitstream.hpp"

#include <bit>
#include <string>

#include "byte_io.hpp"
#include "msvq/entropy.hpp"
#include "msvq/error.hpp"
#include "msvq/parallel.hpp"

namespace msvq {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes) {
    std::uint32_t h = 0x811c9dc5u;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x01000193u;
    }
    return h;
}

namespace {

constexpr std::uint16_t kFlagEc = 1u << 0;
constexpr std::uint16_t kFlagStrict = 1u << 1;
constexpr std::uint16_t kFlagCodes = 1u << 2;
constexpr std::uint32_t kMaxDimension = 1u << 24;

} // namespace

std::vector<std::uint8_t> model_to_bytes(const MsvqModel& model) {
    const auto& layout = model.layout();
    detail::ByteWriter w;
    w.tag("MSVQ");
    w.u16(kModelVersion);
    std::uint16_t flags = 0;
    if (model.ec_enabled()) flags |= kFlagEc;
    if (model.strict_default()) flags |= kFlagStrict;
    if (model.has_entropy_codes()) flags |= kFlagCodes;
    w.u16(flags);
    w.u32(static_cast<std::uint32_t>(layout.m_dim));
    w.u32(static_cast<std::uint32_t>(layout.sub_dim));
    w.u32(static_cast<std::uint32_t>(layout.n_sub));
    w.u32(static_cast<std::uint32_t>(layout.n_groups));
    w.u32(static_cast<std::uint32_t>(layout.t_max));
    for (auto p : layout.perm) w.u32(p);
    for (auto g : layout.group_of) w.u32(g);
    for (auto b : layout.bits.values) w.u8(b);
    for (float v : model.fallback_means()) w.f32(v);
    for (double l : model.lambdas()) w.f64(l);
    for (const auto& cb : model.codebooks())
        for (float v : cb.vectors()) w.f32(v);
    for (const auto& cb : model.codebooks())
        for (double p : cb.prior()) w.f64(p);
    if (flags & kFlagCodes)
        for (const auto& cb : model.codebooks())
            for (auto len : cb.code_lengths()) w.u8(len);
    w.u64(model.table_digest());
    w.u64(fnv1a64(w.data()));
    return w.take();
}

MsvqModel model_from_bytes(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "model");
    if (!r.tag("MSVQ")) throw CorruptionError("model: bad magic (expected MSVQ)");
    const auto version = r.u16();
    if (version != kModelVersion) throw CorruptionError("model: unsupported version " + std::to_string(version));
    if (bytes.size() < 16) throw CorruptionError("model: file too short");
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[bytes.size() - 8 + i]} << (8 * i);
    if (stored != fnv1a64(bytes.first(bytes.size() - 8))) throw CorruptionError("model: checksum mismatch");

    const auto flags = r.u16();
    if (flags & ~(kFlagEc | kFlagStrict | kFlagCodes)) throw CorruptionError("model: unknown flag bits");
    SubVectorLayout layout;
    const std::uint32_t m = r.u32(), d = r.u32(), n = r.u32(), g = r.u32(), t = r.u32();
    if (m == 0 || m > kMaxDimension || d == 0 || n == 0 || std::uint64_t{n} * d != m || g == 0 || g > n ||
        t == 0 || t > kMaxStages)
        throw CorruptionError("model: inconsistent layout header");
    layout.m_dim = m;
    layout.sub_dim = d;
    layout.n_sub = n;
    layout.n_groups = g;
    layout.t_max = t;
    r.require(std::size_t{m} * 4 + std::size_t{n} * 4 + std::size_t{n} * t);
    layout.perm.resize(m);
    for (auto& p : layout.perm) p = r.u32();
    layout.group_of.resize(n);
    for (auto& x : layout.group_of) x = r.u32();
    layout.bits = BitMatrix(n, t);
    for (auto& b : layout.bits.values) b = r.u8();
    try {
        layout.validate();
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("model: ") + e.what());
    }

    std::vector<float> fallback(m);
    r.require(std::size_t{m} * 4 + std::size_t{t} * 8);
    for (auto& v : fallback) v = r.f32();
    std::vector<double> lambda(t);
    for (auto& l : lambda) l = r.f64();

    // Codebook k = group * T + stage; sizes follow the first member of each group.
    std::vector<std::size_t> first_member(g, n);
    for (std::size_t i = n; i-- > 0;) first_member[layout.group_of[i]] = i;
    std::vector<unsigned> cb_bits(std::size_t{g} * t);
    for (std::size_t gi = 0; gi < g; ++gi) {
        if (first_member[gi] == n) throw CorruptionError("model: group " + std::to_string(gi) + " has no members");
        for (std::size_t s = 0; s < t; ++s) cb_bits[gi * t + s] = layout.bits_at(first_member[gi], s);
    }
    std::vector<std::vector<float>> vectors(cb_bits.size());
    for (std::size_t k = 0; k < cb_bits.size(); ++k) {
        const std::size_t count = (std::size_t{1} << cb_bits[k]) * d;
        r.require(count * 4);
        vectors[k].resize(count);
        for (auto& v : vectors[k]) v = r.f32();
    }
    std::vector<std::vector<double>> priors(cb_bits.size());
    for (std::size_t k = 0; k < cb_bits.size(); ++k) {
        const std::size_t count = std::size_t{1} << cb_bits[k];
        r.require(count * 8);
        priors[k].resize(count);
        for (auto& p : priors[k]) p = r.f64();
    }
    std::vector<std::vector<std::uint8_t>> lengths(cb_bits.size());
    if (flags & kFlagCodes) {
        for (std::size_t k = 0; k < cb_bits.size(); ++k) {
            const std::size_t count = std::size_t{1} << cb_bits[k];
            auto raw = r.bytes(count);
            lengths[k].assign(raw.begin(), raw.end());
        }
    }
    const std::uint64_t table_digest = r.u64();
    r.u64(); // checksum, verified above
    if (r.remaining() != 0) throw CorruptionError("model: trailing bytes");

    try {
        std::vector<Codebook> codebooks;
        codebooks.reserve(cb_bits.size());
        for (std::size_t k = 0; k < cb_bits.size(); ++k)
            codebooks.emplace_back(d, cb_bits[k], std::move(vectors[k]), std::move(priors[k]), std::move(lengths[k]));
        return MsvqModel(std::move(layout), std::move(codebooks), std::move(fallback), (flags & kFlagEc) != 0,
                         std::move(lambda), (flags & kFlagStrict) != 0, table_digest);
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("model: ") + e.what());
    }
}

void write_model(const std::string& path, const MsvqModel& model) { detail::write_file(path, model_to_bytes(model)); }

MsvqModel read_model(const std::string& path) { return model_from_bytes(detail::read_file(path)); }

std::uint64_t model_digest(const MsvqModel& model) { return fnv1a64(model_to_bytes(model)); }

void require_table_binding(const MsvqModel& model, std::uint64_t table_digest) {
    if (model.table_digest() == 0) throw StateError("model is not bound to a marginal-loss table (run `table` first)");
    if (model.table_digest() != table_digest) throw StateError("model/table mismatch: table digest differs from the one bound to the model");
}

unsigned plan_field_bits(std::size_t t_max) { return static_cast<unsigned>(std::bit_width(t_max)); }

namespace {

void write_plan(BitWriter& w, const SelectionPlan& plan, unsigned width) {
    for (auto s : plan.stages) w.put(s, width);
}

SelectionPlan read_plan(BitReader& in, const MsvqModel& model, unsigned width) {
    std::vector<std::uint8_t> stages(model.n_sub());
    for (auto& s : stages) {
        const auto v = in.get(width);
        if (v > model.t_max()) throw CorruptionError("payload: stage count " + std::to_string(v) + " exceeds T_max");
        s = static_cast<std::uint8_t>(v);
    }
    return make_plan(model.layout(), std::move(stages));
}

void write_indices(BitWriter& w, const MsvqModel& model, const EncodedFeature& f, const CodeSet* codes) {
    if (codes) {
        encode_indices(f, *codes, w);
        return;
    }
    for (std::size_t i = 0; i < f.indices.size(); ++i)
        for (std::size_t t = 0; t < f.indices[i].size(); ++t) w.put(f.indices[i][t], model.layout().bits_at(i, t));
}

std::vector<std::vector<std::uint32_t>> read_indices(BitReader& in, const MsvqModel& model, const SelectionPlan& plan,
                                                     const CodeSet* codes) {
    if (codes) return decode_indices(in, plan, *codes);
    std::vector<std::vector<std::uint32_t>> out(plan.stages.size());
    for (std::size_t i = 0; i < plan.stages.size(); ++i)
        for (std::size_t t = 0; t < plan.stages[i]; ++t) out[i].push_back(in.get(model.layout().bits_at(i, t)));
    return out;
}

} // namespace

std::vector<std::uint8_t> write_payload(const MsvqModel& model, const PayloadHeader& header,
                                        const std::optional<SelectionPlan>& plan,
                                        std::span<const EncodedFeature> vectors) {
    if (header.ec != model.ec_enabled()) throw ConfigError("payload: EC flag must match the model");
    if (header.count != vectors.size()) throw ConfigError("payload: header count does not match vector count");
    if (header.mode == PlanMode::explicit_global && !plan) throw ConfigError("payload: explicit plan missing");
    std::optional<CodeSet> codes;
    if (header.ec) codes.emplace(model);

    detail::ByteWriter w;
    w.tag("MSVP");
    w.u16(header.version);
    w.u8(static_cast<std::uint8_t>((header.ec ? 1u : 0u) | (static_cast<unsigned>(header.mode) << 1)));
    w.u8(0);
    w.u64(header.model_digest);
    w.u32(header.b_cap);
    w.u32(header.count);
    w.u32(fnv1a32(w.data()));

    const unsigned width = plan_field_bits(model.t_max());
    BitWriter body;
    if (header.mode == PlanMode::explicit_global) {
        validate_plan(model.layout(), *plan);
        write_plan(body, *plan, width);
        body.align();
    }
    for (const auto& f : vectors) {
        validate_plan(model.layout(), f.plan);
        if (header.mode != PlanMode::explicit_per_vector && plan && f.plan.stages != plan->stages)
            throw ConfigError("payload: vector plan differs from the shared plan");
        if (header.mode == PlanMode::explicit_per_vector) write_plan(body, f.plan, width);
        write_indices(body, model, f, codes ? &*codes : nullptr);
        body.align();
    }
    w.bytes(body.bytes());
    return w.take();
}

PayloadHeader read_payload_header(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "payload");
    if (!r.tag("MSVP")) throw CorruptionError("payload: bad magic (expected MSVP)");
    PayloadHeader h;
    h.version = r.u16();
    const auto flags = r.u8();
    const auto reserved = r.u8();
    h.model_digest = r.u64();
    h.b_cap = r.u32();
    h.count = r.u32();
    const auto check = r.u32();
    if (check != fnv1a32(bytes.first(kPayloadHeaderBytes - 4))) throw CorruptionError("payload: header checksum mismatch");
    if (h.version != kPayloadVersion) throw CorruptionError("payload: unsupported version " + std::to_string(h.version));
    if (reserved != 0 || (flags >> 3) != 0) throw CorruptionError("payload: reserved bits set");
    const unsigned mode = (flags >> 1) & 3u;
    if (mode > 2) throw CorruptionError("payload: unknown plan mode");
    h.ec = (flags & 1u) != 0;
    h.mode = static_cast<PlanMode>(mode);
    return h;
}

Payload read_payload(std::span<const std::uint8_t> bytes, const MsvqModel& model, const MarginalLossTable& table) {
    Payload p;
    p.header = read_payload_header(bytes);
    if (p.header.model_digest != model_digest(model))
        throw StateError("payload/model mismatch: payload was produced with a different model");
    if (p.header.ec != model.ec_enabled()) throw CorruptionError("payload: EC flag disagrees with the model");
    std::optional<CodeSet> codes;
    if (p.header.ec) codes.emplace(model);

    BitReader in(bytes.subspan(kPayloadHeaderBytes));
    const unsigned width = plan_field_bits(model.t_max());
    SelectionPlan shared;
    if (p.header.mode == PlanMode::derived) {
        shared = plan_for_model(model, table, p.header.b_cap);
    } else if (p.header.mode == PlanMode::explicit_global) {
        shared = read_plan(in, model, width);
        in.align();
    }
    p.vectors.reserve(p.header.count);
    for (std::uint32_t v = 0; v < p.header.count; ++v) {
        EncodedFeature f;
        f.plan = p.header.mode == PlanMode::explicit_per_vector ? read_plan(in, model, width) : shared;
        f.indices = read_indices(in, model, f.plan, codes ? &*codes : nullptr);
        in.align();
        p.vectors.push_back(std::move(f));
    }
    if (in.byte_position() != bytes.size() - kPayloadHeaderBytes)
        throw CorruptionError("payload: " + std::to_string(bytes.size() - kPayloadHeaderBytes - in.byte_position()) +
                              " trailing bytes after " + std::to_string(p.header.count) + " vectors");
    return p;
}

TransmitResult transmit(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                        const EncodeOptions& options) {
    if (data.cols() != model.layout().m_dim) throw DataError("transmit: data width does not match the model");
    data.require_finite();
    TransmitResult res;
    res.plan = plan_for_model(model, table, options.b_cap);
    const std::size_t rows = data.rows();
    res.encoded.resize(rows);
    res.z_hat.resize(rows);
    res.index_bits.resize(rows);
    std::optional<CodeSet> codes;
    if (model.ec_enabled()) codes.emplace(model);
    const bool strict = options.strict && model.ec_enabled();

    auto vector_bits = [&](const EncodedFeature& f) -> std::uint64_t {
        if (!codes) return f.plan.exact_bits;
        std::uint64_t b = 0;
        for (std::size_t i = 0; i < f.indices.size(); ++i)
            for (std::size_t t = 0; t < f.indices[i].size(); ++t) b += codes->at(i, t).length(f.indices[i][t]);
        return b;
    };

    std::vector<std::size_t> retracted(parallel::chunk_count(rows, 256), 0);
    parallel::for_chunks(rows, 256, [&](std::size_t c, std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            EncodeResult enc = encode(model, data.row(r), res.plan);
            std::uint64_t bits = vector_bits(enc.encoded);
            if (strict && bits > options.b_cap) {
                auto& f = enc.encoded;
                std::vector<std::uint32_t> order = f.plan.order;
                while (bits > options.b_cap && !order.empty()) {
                    const auto i = order.back();
                    order.pop_back();
                    f.indices[i].pop_back();
                    --f.plan.stages[i];
                    ++retracted[c];
                    bits = vector_bits(f);
                }
                SelectionPlan adjusted = make_plan(model.layout(), f.plan.stages);
                adjusted.order = std::move(order);
                adjusted.avg_bits = static_cast<double>(bits);
                f.plan = std::move(adjusted);
                enc.z_hat = decode(model, f);
            }
            res.index_bits[r] = bits;
            res.z_hat[r] = std::move(enc.z_hat);
            res.encoded[r] = std::move(enc.encoded);
        }
    });
    for (auto n : retracted) res.strict_retractions += n;

    PayloadHeader header;
    header.ec = model.ec_enabled();
    header.mode = res.strict_retractions > 0 ? PlanMode::explicit_per_vector : options.mode;
    header.model_digest = model_digest(model);
    header.b_cap = options.b_cap;
    header.count = static_cast<std::uint32_t>(rows);
    res.payload = write_payload(model, header,
                                header.mode == PlanMode::explicit_per_vector ? std::nullopt
                                                                             : std::optional<SelectionPlan>(res.plan),
                                res.encoded);
    return res;
}

ReceiveResult receive(const MsvqModel& model, const MarginalLossTable& table, std::span<const std::uint8_t> payload) {
    ReceiveResult res;
    res.payload = read_payload(payload, model, table);
    res.z_hat.resize(res.payload.vectors.size());
    parallel::for_chunks(res.z_hat.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) res.z_hat[r] = decode(model, res.payload.vectors[r]);
    });
    return res;
}

} // namespace msvq
