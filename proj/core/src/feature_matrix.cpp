#include "msvq/feature_matrix.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"
#include "msvq/error.hpp"

namespace msvq {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to '" + path + "' failed");
}

} // namespace detail

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols)
        throw DataError("feature matrix: " + std::to_string(values_.size()) +
                        " values for " + std::to_string(rows) + "x" + std::to_string(cols));
}

void FeatureMatrix::require_finite() const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k]))
            throw DataError("non-finite feature at row " + std::to_string(k / cols_) +
                            ", column " + std::to_string(k % cols_));
    }
}

FeatureMatrix FeatureMatrix::head(std::size_t n) const {
    n = std::min(n, rows_);
    return FeatureMatrix(n, cols_,
                         std::vector<float>(values_.begin(),
                                            values_.begin() + static_cast<std::ptrdiff_t>(n * cols_)));
}

std::vector<std::uint8_t> fmat_to_bytes(const FeatureMatrix& m) {
    detail::ByteWriter w;
    w.tag("FMAT");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (float v : m.values()) w.f32(v);
    return w.take();
}

FeatureMatrix fmat_from_bytes(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "FMAT1");
    if (!r.tag("FMAT")) throw CorruptionError("FMAT1: bad magic");
    const auto version = r.u32();
    if (version != 1) throw CorruptionError("FMAT1: unsupported version " + std::to_string(version));
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    if (r.remaining() != rows * cols * 4)
        throw CorruptionError("FMAT1: payload is " + std::to_string(r.remaining()) +
                              " bytes, header declares " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    std::vector<float> values(rows * cols);
    for (auto& v : values) v = r.f32();
    return FeatureMatrix(rows, cols, std::move(values));
}

void write_fmat(const std::string& path, const FeatureMatrix& m) {
    detail::write_file(path, fmat_to_bytes(m));
}

FeatureMatrix read_fmat(const std::string& path) {
    return fmat_from_bytes(detail::read_file(path));
}

} // namespace msvq
