#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clotseg/error.hpp"

namespace clotseg {

/// Smallest edge length the filter pipeline accepts.
inline constexpr std::size_t kMinImageEdge = 8;

inline double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

/// Row-major 2-D field of normalized intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), pixels_(width * height, clamp01(fill)) {}

  /// Validates the pixel count and the [0, 1] range.
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_) {
      throw Error(ErrorCode::dimension_mismatch,
                  "pixel count " + std::to_string(pixels_.size()) + " != " +
                      std::to_string(width_) + "x" + std::to_string(height_));
    }
    for (double p : pixels_) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::invalid_params, "pixel value outside [0,1]");
      }
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double operator()(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }
  double& operator()(std::size_t x, std::size_t y) noexcept { return pixels_[y * width_ + x]; }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool same_shape(const GrayImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Row-major pixel set with the dimensions of the image it annotates.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height)
      : width_(width), height_(height), bits_(width * height, 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t x, std::size_t y) const noexcept { return bits_[y * width_ + x] != 0; }
  bool test(std::size_t index) const noexcept { return bits_[index] != 0; }
  void set(std::size_t x, std::size_t y, bool on = true) noexcept { bits_[y * width_ + x] = on ? 1 : 0; }
  void set_index(std::size_t index, bool on = true) noexcept { bits_[index] = on ? 1 : 0; }

  std::size_t popcount() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool any() const noexcept { return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end(); }

  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename Image>
  bool matches(const Image& image) const noexcept {
    return width_ == image.width() && height_ == image.height();
  }

  /// True when every set bit of this mask is also set in `other`.
  bool subset_of(const BinaryMask& other) const noexcept {
    if (!same_shape(other)) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
  }

  BinaryMask operator&(const BinaryMask& other) const { return combine(other, [](bool a, bool b) { return a && b; }); }
  BinaryMask operator|(const BinaryMask& other) const { return combine(other, [](bool a, bool b) { return a || b; }); }
  BinaryMask minus(const BinaryMask& other) const { return combine(other, [](bool a, bool b) { return a && !b; }); }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  template <typename Op>
  BinaryMask combine(const BinaryMask& other, Op op) const {
    if (!same_shape(other)) throw Error(ErrorCode::dimension_mismatch, "mask shapes differ");
    BinaryMask out(width_, height_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = op(bits_[i] != 0, other.bits_[i] != 0) ? 1 : 0;
    return out;
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace clotseg
