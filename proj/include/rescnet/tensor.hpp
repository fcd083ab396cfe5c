#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rescnet {

// Dense 4-axis array of shape height x width x channels x count.
//
// Storage is one contiguous block per sample, channel planes inside a
// sample, and column-major pixels inside a plane (row index fastest), so
// plane(s, ch) is a contiguous height*width span.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t height, std::size_t width, std::size_t channels, std::size_t count,
          double fill = 0.0)
      : height_(height),
        width_(width),
        channels_(channels),
        count_(count),
        data_(height * width * channels * count, fill) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t count() const { return count_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t sample_size() const { return height_ * width_ * channels_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c, std::size_t ch, std::size_t s) {
    return data_[index(r, c, ch, s)];
  }
  double operator()(std::size_t r, std::size_t c, std::size_t ch, std::size_t s) const {
    return data_[index(r, c, ch, s)];
  }

  std::span<double> plane(std::size_t s, std::size_t ch) {
    return {data_.data() + (s * channels_ + ch) * plane_size(), plane_size()};
  }
  std::span<const double> plane(std::size_t s, std::size_t ch) const {
    return {data_.data() + (s * channels_ + ch) * plane_size(), plane_size()};
  }
  std::span<double> sample(std::size_t s) {
    return {data_.data() + s * sample_size(), sample_size()};
  }
  std::span<const double> sample(std::size_t s) const {
    return {data_.data() + s * sample_size(), sample_size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor4& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_ &&
           count_ == o.count_;
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t index(std::size_t r, std::size_t c, std::size_t ch, std::size_t s) const {
    return ((s * channels_ + ch) * width_ + c) * height_ + r;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;
};

}  // namespace rescnet
