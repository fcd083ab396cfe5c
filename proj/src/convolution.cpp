#include "rescnet/convolution.hpp"

#include <algorithm>
#include <string>

#include "rescnet/errors.hpp"

namespace rescnet {

Tensor4 convolve_same(const Tensor4& input, const FilterBank& bank) {
  if (static_cast<std::size_t>(bank.in_channels) != input.channels()) {
    throw DimensionError("convolve_same: bank expects " + std::to_string(bank.in_channels) +
                         " channels, input has " + std::to_string(input.channels()));
  }
  const auto h = static_cast<std::ptrdiff_t>(input.height());
  const auto w = static_cast<std::ptrdiff_t>(input.width());
  const int k = bank.patch_size;
  const int pad = (k - 1) / 2;
  const auto c_in = static_cast<std::ptrdiff_t>(input.channels());
  const auto c_out = static_cast<Eigen::Index>(bank.out_channels());
  const auto pixels = static_cast<Eigen::Index>(h * w);
  const Eigen::Index dim = bank.kernels.rows();

  Tensor4 out(input.height(), input.width(), static_cast<std::size_t>(c_out), input.count());
  const auto n = static_cast<std::ptrdiff_t>(input.count());

#pragma omp parallel
  {
    // One row per output pixel, one column per kernel tap.
    linalg::Matrix taps(pixels, dim);
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
      for (std::ptrdiff_t ch = 0; ch < c_in; ++ch) {
        const auto plane = input.plane(static_cast<std::size_t>(s), static_cast<std::size_t>(ch));
        for (int dc = 0; dc < k; ++dc) {
          for (int dr = 0; dr < k; ++dr) {
            double* col = taps.col(dr + k * dc + k * k * ch).data();
            const std::ptrdiff_t off_r = dr - pad;
            const std::ptrdiff_t off_c = dc - pad;
            for (std::ptrdiff_t c = 0; c < w; ++c) {
              double* dst = col + c * h;
              const std::ptrdiff_t sc = c + off_c;
              const std::ptrdiff_t r_begin = std::max<std::ptrdiff_t>(0, -off_r);
              const std::ptrdiff_t r_end = std::min<std::ptrdiff_t>(h, h - off_r);
              if (sc < 0 || sc >= w || r_end <= r_begin) {
                std::fill(dst, dst + h, 0.0);
                continue;
              }
              const double* src = plane.data() + sc * h;
              std::fill(dst, dst + r_begin, 0.0);
              std::copy(src + r_begin + off_r, src + r_end + off_r, dst + r_begin);
              std::fill(dst + r_end, dst + h, 0.0);
            }
          }
        }
      }
      Eigen::Map<linalg::Matrix> result(out.sample(static_cast<std::size_t>(s)).data(), pixels,
                                        c_out);
      result.noalias() = taps * bank.kernels;
      result.rowwise() += bank.bias.transpose();
    }
  }
  return out;
}

Tensor4 concat_with_input(const Tensor4& maps, const Tensor4& original) {
  if (maps.height() != original.height() || maps.width() != original.width() ||
      maps.count() != original.count()) {
    throw DimensionError("concat_with_input: spatial size or sample count differs");
  }
  Tensor4 out(maps.height(), maps.width(), maps.channels() + original.channels(), maps.count());
  for (std::size_t s = 0; s < maps.count(); ++s) {
    const auto a = maps.sample(s);
    const auto b = original.sample(s);
    auto dst = out.sample(s);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

}  // namespace rescnet
