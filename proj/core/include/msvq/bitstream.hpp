#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msvq/feature_matrix.hpp"
#include "msvq/model.hpp"
#include "msvq/quantizer.hpp"
#include "msvq/rate.hpp"

namespace msvq {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes);

inline constexpr std::uint16_t kModelVersion = 1;
inline constexpr std::uint16_t kPayloadVersion = 1;

std::vector<std::uint8_t> model_to_bytes(const MsvqModel& model);
/// Validates magic, version, checksum and every size field; CorruptionError otherwise.
MsvqModel model_from_bytes(std::span<const std::uint8_t> bytes);

void write_model(const std::string& path, const MsvqModel& model);
MsvqModel read_model(const std::string& path);

/// Digest of the serialized model, carried by payloads to bind them to it.
std::uint64_t model_digest(const MsvqModel& model);

/// Throws StateError unless the model is bound to a table with this digest.
void require_table_binding(const MsvqModel& model, std::uint64_t table_digest);

enum class PlanMode : std::uint8_t {
    derived = 0,             ///< receiver recomputes the plan from (table, b_cap)
    explicit_global = 1,     ///< one plan in the header
    explicit_per_vector = 2, ///< every vector carries its own plan
};

struct PayloadHeader {
    std::uint16_t version = kPayloadVersion;
    bool ec = false;
    PlanMode mode = PlanMode::derived;
    std::uint64_t model_digest = 0;
    std::uint32_t b_cap = 0;
    std::uint32_t count = 0;
};

inline constexpr std::size_t kPayloadHeaderBytes = 28;

struct Payload {
    PayloadHeader header;
    std::vector<EncodedFeature> vectors;
};

/// Bits of one packed stage count: ceil(log2(T_max + 1)).
unsigned plan_field_bits(std::size_t t_max);

/// Serializes vectors against the model. `plan` is the shared plan written in
/// explicit_global mode; derived mode writes no plan at all.
std::vector<std::uint8_t> write_payload(const MsvqModel& model, const PayloadHeader& header,
                                        const std::optional<SelectionPlan>& plan,
                                        std::span<const EncodedFeature> vectors);

PayloadHeader read_payload_header(std::span<const std::uint8_t> bytes);

/// Parses a payload. Derived mode recomputes the plan from (table, b_cap).
Payload read_payload(std::span<const std::uint8_t> bytes, const MsvqModel& model, const MarginalLossTable& table);

struct EncodeOptions {
    std::uint32_t b_cap = 0;
    /// EC only: retract the last greedy increments of any vector whose
    /// realized bits exceed b_cap; such payloads carry per-vector plans.
    bool strict = false;
    PlanMode mode = PlanMode::derived;
};

struct TransmitResult {
    std::vector<std::uint8_t> payload;
    SelectionPlan plan;
    std::vector<EncodedFeature> encoded;
    /// Transmitter-side reconstructions, one per row.
    std::vector<std::vector<double>> z_hat;
    /// Index bits of each vector before byte alignment.
    std::vector<std::uint64_t> index_bits;
    std::size_t strict_retractions = 0;
};

TransmitResult transmit(const MsvqModel& model, const MarginalLossTable& table, const FeatureMatrix& data,
                        const EncodeOptions& options);

struct ReceiveResult {
    Payload payload;
    std::vector<std::vector<double>> z_hat;
};

ReceiveResult receive(const MsvqModel& model, const MarginalLossTable& table, std::span<const std::uint8_t> payload);

} // namespace msvq
