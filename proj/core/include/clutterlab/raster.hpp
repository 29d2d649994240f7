// Copyright 2026 The clutterlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clutterlab/error.hpp"

namespace clutterlab {

using ClassId = std::uint16_t;

struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned pixel box. Minimums are inclusive, maximums exclusive.
struct Box {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min; }
  int height() const noexcept { return y_max - y_min; }
  std::int64_t area() const noexcept {
    return is_valid() ? std::int64_t{width()} * height() : 0;
  }
  bool is_valid() const noexcept {
    return 0 <= x_min && x_min < x_max && 0 <= y_min && y_min < y_max;
  }
  bool contains(int x, int y) const noexcept {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
  bool fits_within(int width, int height) const noexcept {
    return is_valid() && x_max <= width && y_max <= height;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

std::string to_string(const Box& box);

// Coordinate-wise intersection; nullopt when the overlap is degenerate.
std::optional<Box> intersect(const Box& a, const Box& b);

// Dense row-major raster with interleaved channels.
template <typename T, std::size_t Channels>
class Raster {
 public:
  using value_type = T;
  static constexpr std::size_t kChannels = Channels;

  Raster() = default;

  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * Channels) {
      throw ValidationError("raster data length " +
                            std::to_string(data_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height) + "x" +
                            std::to_string(Channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t byte_size() const noexcept { return data_.size() * sizeof(T); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels;
  }

  T& at(int x, int y, std::size_t c = 0) noexcept {
    return data_[offset(x, y) + c];
  }
  const T& at(int x, int y, std::size_t c = 0) const noexcept {
    return data_[offset(x, y) + c];
  }

  std::span<T, Channels> pixel(int x, int y) noexcept {
    return std::span<T, Channels>(data_.data() + offset(x, y), Channels);
  }
  std::span<const T, Channels> pixel(int x, int y) const noexcept {
    return std::span<const T, Channels>(data_.data() + offset(x, y), Channels);
  }

  template <typename U, std::size_t C>
  bool same_dims(const Raster<U, C>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw ValidationError("raster dimensions must be positive, got " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t, 3>;
using LabelMap = Raster<std::uint16_t, 1>;
// One byte per pixel, 0 or 1.
using BinaryMask = Raster<std::uint8_t, 1>;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

std::size_t count_true(const BinaryMask& mask);

// Tight box around the true pixels, or nullopt for an empty mask.
std::optional<Box> tight_box(const BinaryMask& mask);

// Tight box around pixels carrying `id`, or nullopt if none do.
std::optional<Box> tight_box(const LabelMap& labels, ClassId id);

// Mask of pixels whose label equals `id`.
BinaryMask mask_of(const LabelMap& labels, ClassId id);

// Sorted distinct nonzero ids.
std::vector<ClassId> present_ids(const LabelMap& labels);

}  // namespace clutterlab
