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

#include "clutterlab/raster.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace clutterlab {

std::string to_string(const Box& box) {
  return "(" + std::to_string(box.x_min) + "," + std::to_string(box.y_min) +
         "," + std::to_string(box.x_max) + "," + std::to_string(box.y_max) +
         ")";
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  Box out{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
          std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
  if (out.x_min >= out.x_max || out.y_min >= out.y_max) return std::nullopt;
  return out;
}

std::size_t count_true(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(),
                    [](std::uint8_t v) { return v != 0; }));
}

namespace {

template <typename Pred>
std::optional<Box> tight_box_where(int width, int height, Pred&& pred) {
  int x_min = std::numeric_limits<int>::max();
  int y_min = std::numeric_limits<int>::max();
  int x_max = -1;
  int y_max = -1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!pred(x, y)) continue;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max < 0) return std::nullopt;
  return Box{x_min, y_min, x_max + 1, y_max + 1};
}

}  // namespace

std::optional<Box> tight_box(const BinaryMask& mask) {
  return tight_box_where(mask.width(), mask.height(), [&](int x, int y) {
    return mask.at(x, y) != 0;
  });
}

std::optional<Box> tight_box(const LabelMap& labels, ClassId id) {
  return tight_box_where(labels.width(), labels.height(), [&](int x, int y) {
    return labels.at(x, y) == id;
  });
}

BinaryMask mask_of(const LabelMap& labels, ClassId id) {
  BinaryMask mask(labels.width(), labels.height());
  auto src = labels.data();
  auto dst = mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == id ? 1 : 0;
  return mask;
}

std::vector<ClassId> present_ids(const LabelMap& labels) {
  std::vector<bool> seen(std::numeric_limits<ClassId>::max() + 1, false);
  std::vector<ClassId> ids;
  for (ClassId v : labels.data()) {
    if (v != 0 && !seen[v]) {
      seen[v] = true;
      ids.push_back(v);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace clutterlab
