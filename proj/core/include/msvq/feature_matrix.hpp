#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace msvq {

/// Row-major set of M-dimensional feature vectors (binary32 storage).
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const float> row(std::size_t r) const {
        return {values_.data() + r * cols_, cols_};
    }
    std::span<float> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

    float operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    float& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    const std::vector<float>& values() const { return values_; }

    /// Throws DataError naming the first non-finite entry.
    void require_finite() const;

    /// First `n` rows (or all when n >= rows()).
    FeatureMatrix head(std::size_t n) const;

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> values_;
};

// FMAT1: "FMAT", u32 version = 1, u32 rows, u32 cols, then rows*cols f32, all LE.
std::vector<std::uint8_t> fmat_to_bytes(const FeatureMatrix& m);
FeatureMatrix fmat_from_bytes(std::span<const std::uint8_t> bytes);

void write_fmat(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_fmat(const std::string& path);

} // namespace msvq
