#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rescnet/linalg.hpp"
#include "rescnet/tensor.hpp"

namespace rescnet {

// Images (height x width x channels x count, values in [0,1]) with 0-based
// class labels.
struct ImageSet {
  Tensor4 images;
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const { return labels.size(); }
};

// Throws DomainError unless channels are 1 or 3, N > 0 and labels < C.
void validate(const ImageSet& set);

enum class CifarVariant { cifar10, cifar100 };

// IDX pair (big-endian magic 0x803 / 0x801). Pixels are scaled by 1/255.
ImageSet load_mnist(const std::filesystem::path& image_path,
                    const std::filesystem::path& label_path);

// Concatenates CIFAR binary batches in the order given. CIFAR-100 records
// carry a coarse then a fine label byte; the fine label is kept.
ImageSet load_cifar(std::span<const std::filesystem::path> paths, CifarVariant variant);

// Directory of PNG or JPEG files listed in a tab-separated manifest whose
// first two columns are (file name relative to root, class name). Extra
// columns are ignored, so TinyImageNet's val_annotations.txt works as-is.
// Class indices follow the sorted class names. All images must share one
// size; greyscale files are expanded to three channels.
ImageSet load_folder_dataset(const std::filesystem::path& root,
                             const std::filesystem::path& manifest);

// Row i has a 1 at column labels[i].
linalg::Matrix one_hot(std::span<const int> labels, int class_count);

// Per sample and per channel, maps values onto [0,1]. Constant channels
// become all zeros.
Tensor4 min_max_normalize(const Tensor4& x);

// Originals followed by their left-right mirrors, labels duplicated.
ImageSet augment_hflip(const ImageSet& set);

// First `count` samples (all when count is 0 or exceeds the set).
ImageSet take_prefix(const ImageSet& set, std::size_t count);

// The samples at `indices`, in that order.
ImageSet select(const ImageSet& set, std::span<const std::size_t> indices);

}  // namespace rescnet
