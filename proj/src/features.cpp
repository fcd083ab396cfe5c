#include "rescnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rescnet/errors.hpp"

namespace rescnet {

using linalg::Matrix;

Tensor4 relu(const Tensor4& maps) {
  Tensor4 out = maps;
  for (double& v : out.data()) v = std::max(v, 0.0);
  return out;
}

SopGrid second_order_pool(const Tensor4& maps, std::size_t sample, std::size_t block_rows,
                          std::size_t block_cols, std::size_t stride) {
  if (block_rows > maps.height() || block_cols > maps.width() || block_rows == 0 ||
      block_cols == 0) {
    throw DimensionError("second_order_pool: " + std::to_string(block_rows) + "x" +
                         std::to_string(block_cols) + " block on a " +
                         std::to_string(maps.height()) + "x" + std::to_string(maps.width()) +
                         " map");
  }
  if (stride == 0) throw DomainError("second_order_pool: stride must be >= 1");
  if (block_rows * block_cols < 2) {
    throw InsufficientDataError("second_order_pool: a block needs at least 2 pixels");
  }
  if (sample >= maps.count()) throw DimensionError("second_order_pool: sample out of range");

  const std::size_t d = maps.channels();
  SopGrid grid;
  grid.grid_rows = sop_grid_side(maps.height(), block_rows, stride);
  grid.grid_cols = sop_grid_side(maps.width(), block_cols, stride);
  grid.feature_len = sop_feature_len(d);
  grid.values.assign(grid.grid_rows * grid.grid_cols * grid.feature_len, 0.0);

  const auto pixels = static_cast<Eigen::Index>(block_rows * block_cols);
  const double count = static_cast<double>(pixels) * static_cast<double>(d);
  Matrix block(pixels, static_cast<Eigen::Index>(d));
  for (std::size_t gc = 0; gc < grid.grid_cols; ++gc) {
    for (std::size_t gr = 0; gr < grid.grid_rows; ++gr) {
      const std::size_t r0 = gr * stride;
      const std::size_t c0 = gc * stride;
      for (std::size_t ch = 0; ch < d; ++ch) {
        const auto plane = maps.plane(sample, ch);
        double* dst = block.col(static_cast<Eigen::Index>(ch)).data();
        for (std::size_t c = 0; c < block_cols; ++c) {
          const double* src = plane.data() + (c0 + c) * maps.height() + r0;
          std::copy(src, src + block_rows, dst + c * block_rows);
        }
      }
      auto out = grid.at(gr, gc);
      if (block.maxCoeff() == block.minCoeff()) continue;  // constant block: zero covariance
      const double mean = block.sum() / count;
      const double var = (block.array() - mean).square().sum() / (count - 1.0);
      block = (block.array() - mean) / std::sqrt(var);

      block.rowwise() -= block.colwise().mean();
      const Matrix cov = (block.transpose() * block) / static_cast<double>(pixels - 1);
      std::size_t f = 0;
      for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        for (Eigen::Index j = i; j < cov.cols(); ++j) out[f++] = cov(i, j);
      }
    }
  }
  return grid;
}

std::string_view to_string(PyramidReduction r) { return r == PyramidReduction::max ? "max" : "sum"; }

PyramidReduction parse_pyramid_reduction(std::string_view text) {
  if (text == "max") return PyramidReduction::max;
  if (text == "sum") return PyramidReduction::sum;
  throw DomainError("unknown pyramid reduction '" + std::string(text) + "'");
}

namespace {

// Start of region i when `side` cells are split into `regions` parts.
std::size_t region_begin(std::size_t side, std::size_t regions, std::size_t i) {
  return i * (side / regions);
}
std::size_t region_end(std::size_t side, std::size_t regions, std::size_t i) {
  return i + 1 == regions ? side : (i + 1) * (side / regions);
}

}  // namespace

linalg::Vector spatial_pyramid_pool(const SopGrid& grid, const PyramidLevels& levels,
                                    PyramidReduction reduction) {
  if (grid.grid_rows == 0 || grid.grid_cols == 0 || grid.feature_len == 0) {
    throw DimensionError("spatial_pyramid_pool: empty grid");
  }
  std::size_t total = 0;
  for (const auto& [lr, lc] : levels) {
    if (lr < 1 || lc < 1) throw DomainError("spatial_pyramid_pool: level sizes must be >= 1");
    total += std::min<std::size_t>(lr, grid.grid_rows) * std::min<std::size_t>(lc, grid.grid_cols);
  }
  const std::size_t f = grid.feature_len;
  linalg::Vector out(static_cast<Eigen::Index>(total * f));
  std::size_t offset = 0;
  for (const auto& [lr, lc] : levels) {
    const std::size_t rows = std::min<std::size_t>(lr, grid.grid_rows);
    const std::size_t cols = std::min<std::size_t>(lc, grid.grid_cols);
    for (std::size_t ri = 0; ri < rows; ++ri) {
      for (std::size_t ci = 0; ci < cols; ++ci) {
        double* dst = out.data() + offset;
        bool first = true;
        for (std::size_t gc = region_begin(grid.grid_cols, cols, ci);
             gc < region_end(grid.grid_cols, cols, ci); ++gc) {
          for (std::size_t gr = region_begin(grid.grid_rows, rows, ri);
               gr < region_end(grid.grid_rows, rows, ri); ++gr) {
            const auto cell = grid.at(gr, gc);
            if (first) {
              std::copy(cell.begin(), cell.end(), dst);
              first = false;
            } else if (reduction == PyramidReduction::max) {
              for (std::size_t k = 0; k < f; ++k) dst[k] = std::max(dst[k], cell[k]);
            } else {
              for (std::size_t k = 0; k < f; ++k) dst[k] += cell[k];
            }
          }
        }
        offset += f;
      }
    }
  }
  return out;
}

Matrix featurize(const Tensor4& maps, const PoolingSpec& spec) {
  const Tensor4 active = relu(maps);
  const auto n = static_cast<std::ptrdiff_t>(maps.count());
  if (n == 0) throw DimensionError("featurize: no samples");
  // The first sample fixes the feature width.
  const linalg::Vector first = spatial_pyramid_pool(
      second_order_pool(active, 0, spec.block_rows, spec.block_cols, spec.stride), spec.levels,
      spec.reduction);
  Matrix features(n, first.size());
  features.row(0) = first.transpose();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 1; s < n; ++s) {
    features.row(s) =
        spatial_pyramid_pool(second_order_pool(active, static_cast<std::size_t>(s),
                                               spec.block_rows, spec.block_cols, spec.stride),
                             spec.levels, spec.reduction)
            .transpose();
  }
  return features;
}

}  // namespace rescnet
