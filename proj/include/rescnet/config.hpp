#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rescnet/dataset.hpp"
#include "rescnet/residual.hpp"

namespace rescnet {

enum class DataFormat { mnist, cifar10, cifar100, folder };

// [data] section: where a run reads its images. File names are relative to
// `dir` (overridable with --data-dir).
struct DataConfig {
  DataFormat format = DataFormat::mnist;
  std::string dir = ".";
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  std::vector<std::string> train_batches;  // CIFAR
  std::vector<std::string> test_batches;
  std::string train_root;  // folder layout
  std::string train_manifest;
  std::string test_root;
  std::string test_manifest;
  std::size_t train_limit = 0;  // 0 keeps everything
  std::size_t test_limit = 0;
  std::size_t validation_count = 0;  // held out from the end of the training data
  bool augment_hflip = false;
};

struct RunConfig {
  DataConfig data;
  TrainConfig train;
};

// Flat `key = value` text with [data] [train] [filters] [pooling] [posterior]
// sections. Unknown sections or keys and malformed values raise ConfigError
// naming the key; the parsed training config is validated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(to_config_text(c)) reproduces c exactly.
std::string to_config_text(const RunConfig& config);

struct DataSplits {
  ImageSet train;
  std::optional<ImageSet> validation;
};

// Loads, truncates, holds out validation samples, then augments the
// training part when configured.
DataSplits load_training_data(const DataConfig& data);
ImageSet load_test_data(const DataConfig& data);

}  // namespace rescnet
