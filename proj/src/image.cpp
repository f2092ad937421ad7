#include "blurvid/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace blurvid {

namespace {

void check_dims(int height, int width, int channels) {
  if (height < 2 || width < 2) {
    throw ShapeError("image must be at least 2x2, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    throw ShapeError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_dims(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("image data length does not match height*width*channels");
  }
}

Image Image::channel(int c) const {
  Image out(height_, width_, 1);
  const std::size_t n = pixel_count();
  for (std::size_t p = 0; p < n; ++p) out.data_[p] = data_[p * channels_ + c];
  return out;
}

void clamp_unit(Image& img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
}

Image clamped_unit(Image img) {
  clamp_unit(img);
  return img;
}

bool all_finite(const Image& img) {
  return std::all_of(img.data().begin(), img.data().end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

void require_same_extent(const Image& a, const Image& b, const char* what) {
  if (!a.same_extent(b)) {
    throw ShapeError(std::string(what) + ": size mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

Image mean_of(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("mean_of: empty image list");
  // Accumulate offsets from the first image so identical inputs average to
  // themselves bit for bit.
  const Image& first = images[0];
  Image offsets(first.height(), first.width(), first.channels());
  for (const Image& img : images.subspan(1)) {
    require_same_shape(first, img, "mean_of");
    auto dst = offsets.data();
    auto src = img.data();
    auto base = first.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] - base[i];
  }
  Image out = first;
  const double n = static_cast<double>(images.size());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += offsets.data()[i] / n;
  return out;
}

}  // namespace blurvid
