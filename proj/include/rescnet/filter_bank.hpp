#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rescnet/lda.hpp"
#include "rescnet/linalg.hpp"
#include "rescnet/tensor.hpp"

namespace rescnet {

// Vectorized k x k x c patches, one per column. Inside a column the row
// offset varies fastest, then the column offset, then the channel:
//   index = dr + k*dc + k*k*ch
struct PatchMatrix {
  linalg::Matrix data;
  int patch_size = 0;
  int in_channels = 0;
  std::size_t per_image = 0;        // (m-k+1)(n-k+1)
  std::vector<std::size_t> source;  // image index of every column
};

PatchMatrix extract_patches(const Tensor4& images, int patch_size,
                            std::optional<std::size_t> max_samples = std::nullopt,
                            std::uint64_t seed = 0);

enum class Provenance { pca, stacked_lda, mixed };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

// k x k x c_in x c_out kernels stored as vectorized columns (same order as
// PatchMatrix) plus one scalar bias per output channel.
struct FilterBank {
  int patch_size = 0;
  int in_channels = 0;
  linalg::Matrix kernels;  // k*k*c_in x c_out
  linalg::Vector bias;     // c_out
  Provenance provenance = Provenance::pca;

  int out_channels() const { return static_cast<int>(kernels.cols()); }
  double kernel(int r, int c, int ch, int out) const {
    return kernels(r + patch_size * c + patch_size * patch_size * ch, out);
  }
};

// Top eigenvectors of the scatter of the mean-centred patches.
FilterBank fit_pca_filters(const PatchMatrix& patches, int num_filters);

struct StackedLdaParams {
  int n_positives = 2;
  int n_negatives = 32;
  double tol = 0.0;  // 0 means the sample must be separated perfectly
  int n_classes = 1;  // filters to accept
  int max_attempts_per_filter = 1000;
  std::uint64_t rng_seed = 0;
  double ridge = kDefaultRidge;
};

// Which patches each accepted filter was fit on, and how many draws it took.
struct StackedLdaReport {
  std::vector<std::vector<std::size_t>> accepted_samples;  // positives first
  std::vector<int> attempts;
};

// Random search for binary LDA problems (n_positives patches of one class
// against n_negatives of the others) whose own sample is separated within
// tol; each accepted discriminant becomes one kernel, its intercept the
// bias. Throws NonSeparableError when a filter exhausts its attempts.
FilterBank fit_stacked_lda_filters(const PatchMatrix& patches, std::span<const int> patch_labels,
                                   const StackedLdaParams& params,
                                   StackedLdaReport* report = nullptr);

// round(ratio*count) leading filters of a, then the leading remainder of b.
FilterBank mix_filter_banks(const FilterBank& a, const FilterBank& b, double ratio, int count);

enum class FilterKind { pca, stacked_lda, mixed };

std::string_view to_string(FilterKind k);
FilterKind parse_filter_kind(std::string_view text);

struct FilterSpec {
  FilterKind kind = FilterKind::pca;
  int patch_size = 3;
  int count = 8;
  double mix_ratio = 0.5;          // stacked-LDA share of a mixed bank
  std::size_t max_patches = 100000;
  int n_positives = 2;
  int n_negatives = 32;
  double tol = 0.0;
  int max_attempts_per_filter = 1000;
  double ridge = kDefaultRidge;
};

// Fits the bank a layer needs from its (already normalized) input images.
// Patch labels for stacked-LDA are the classes of the source images.
FilterBank learn_filter_bank(const Tensor4& input, std::span<const int> image_labels,
                             const FilterSpec& spec, std::uint64_t seed);

}  // namespace rescnet
