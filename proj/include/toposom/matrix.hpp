#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace toposom {

/// Dense row-major sample matrix, float32 storage.
/// Values are immutable once loaded; training code only reads rows.
struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;  // rows * cols, row-major

    DataMatrix() = default;
    DataMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), values(r * c, 0.0f) {}
    DataMatrix(std::size_t r, std::size_t c, std::vector<float> v)
        : rows(r), cols(c), values(std::move(v)) {
        if (values.size() != rows * cols)
            throw std::invalid_argument("DataMatrix: value count != rows*cols");
    }

    const float* row(std::size_t i) const { return values.data() + i * cols; }
    float* row(std::size_t i) { return values.data() + i * cols; }
    bool empty() const { return rows == 0; }
};

}  // namespace toposom
