#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rescnet/linalg.hpp"
#include "rescnet/tensor.hpp"

namespace rescnet {

Tensor4 relu(const Tensor4& maps);

// Per-block covariance features on a grid of block positions.
struct SopGrid {
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::size_t feature_len = 0;  // d(d+1)/2
  std::vector<double> values;   // grid_rows x grid_cols x feature_len, feature fastest

  std::span<const double> at(std::size_t gr, std::size_t gc) const {
    return {values.data() + (gc * grid_rows + gr) * feature_len, feature_len};
  }
  std::span<double> at(std::size_t gr, std::size_t gc) {
    return {values.data() + (gc * grid_rows + gr) * feature_len, feature_len};
  }
};

inline std::size_t sop_feature_len(std::size_t channels) { return channels * (channels + 1) / 2; }
inline std::size_t sop_grid_side(std::size_t map_side, std::size_t block, std::size_t stride) {
  return (map_side - block) / stride + 1;
}

// For each block_rows x block_cols window (step `stride`) of one sample:
// z-score the window with a single mean and standard deviation over all of
// its values (sigma = 0 gives zeros), reshape to pixels x channels, and keep
// the upper triangle (row-major, diagonal included) of the channel
// covariance (divisor pixels-1).
SopGrid second_order_pool(const Tensor4& maps, std::size_t sample, std::size_t block_rows,
                          std::size_t block_cols, std::size_t stride);

enum class PyramidReduction { max, sum };

std::string_view to_string(PyramidReduction r);
PyramidReduction parse_pyramid_reduction(std::string_view text);

// (rows, cols) regions per level.
using PyramidLevels = std::vector<std::pair<int, int>>;

inline PyramidLevels default_pyramid() { return {{4, 4}, {2, 2}, {1, 1}}; }

// Splits the grid into near-equal regions per level (the last region along
// an axis takes the remainder; levels finer than the grid are clamped to
// one cell per region) and reduces each region elementwise. Regions are
// concatenated level by level, row-major inside a level.
linalg::Vector spatial_pyramid_pool(const SopGrid& grid, const PyramidLevels& levels,
                                    PyramidReduction reduction = PyramidReduction::max);

struct PoolingSpec {
  std::size_t block_rows = 7;
  std::size_t block_cols = 7;
  std::size_t stride = 4;
  PyramidLevels levels = default_pyramid();
  PyramidReduction reduction = PyramidReduction::max;
};

// relu -> second-order pooling -> pyramid, one row per sample.
linalg::Matrix featurize(const Tensor4& maps, const PoolingSpec& spec);

}  // namespace rescnet
