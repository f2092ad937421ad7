#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blurvid/error.hpp"

namespace blurvid {

/// Row-major H x W x C grid of real intensities, nominally in [0,1].
///
/// Holds the blurred input, the reference frame, masks, alpha maps and every
/// rendered frame. Channels are interleaved: index = (y * width + x) * channels + c.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  Image(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool same_extent(const Image& o) const { return height_ == o.height_ && width_ == o.width_; }

  // Single channel c as a 1-channel image.
  Image channel(int c) const;

  bool operator==(const Image& o) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Clamp every entry to [0,1].
void clamp_unit(Image& img);
Image clamped_unit(Image img);

bool all_finite(const Image& img);

// Throws ShapeError with `what` in the message when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);
void require_same_extent(const Image& a, const Image& b, const char* what);

// Mean of a stack of equally shaped images, summed in list order.
Image mean_of(std::span<const Image> images);

}  // namespace blurvid
