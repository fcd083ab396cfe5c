#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "rescnet/dataset.hpp"
#include "rescnet/linalg.hpp"
#include "rescnet/tensor.hpp"

namespace test {

using rescnet::linalg::Matrix;
using rescnet::linalg::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  Matrix a = random_matrix(n, n, rng);
  return (a + a.transpose()) / 2.0;
}

inline rescnet::Tensor4 random_tensor(std::size_t h, std::size_t w, std::size_t c, std::size_t n,
                                      std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  rescnet::Tensor4 t(h, w, c, n);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Small labelled image set whose classes differ in mean brightness and in a
// class-specific bright pixel, so LDA-based layers have something to learn.
inline rescnet::ImageSet synthetic_images(std::size_t per_class, int classes, std::size_t side,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  rescnet::ImageSet set;
  set.class_count = classes;
  set.images = rescnet::Tensor4(side, side, 1, per_class * classes);
  std::size_t s = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < classes; ++c, ++s) {
      for (std::size_t col = 0; col < side; ++col)
        for (std::size_t r = 0; r < side; ++r) {
          double v = 0.3 + 0.4 * c / classes + noise(rng);
          if (r == static_cast<std::size_t>(c) % side && col == side / 2) v += 0.5;
          set.images(r, col, 0, s) = std::clamp(v, 0.0, 1.0);
        }
      set.labels.push_back(c);
    }
  }
  return set;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("rescnet_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
