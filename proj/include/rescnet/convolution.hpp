#pragma once

#include "rescnet/filter_bank.hpp"
#include "rescnet/tensor.hpp"

namespace rescnet {

// Same-size cross-correlation (no kernel flip) plus per-filter bias. The
// input is zero padded by (k-1)/2 on the top/left and k-1-(k-1)/2 on the
// bottom/right, so even kernels put the extra row and column at the end.
Tensor4 convolve_same(const Tensor4& input, const FilterBank& bank);

// Channels of `maps` followed by the channels of `original`.
Tensor4 concat_with_input(const Tensor4& maps, const Tensor4& original);

}  // namespace rescnet
