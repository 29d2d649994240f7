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

#include "clutterlab/instance_detection.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

namespace clutterlab {

using nlohmann::json;

std::vector<std::pair<ClassId, RgbImage>> per_class_masked_images(
    const RgbImage& image, const LabelMap& labels) {
  if (!image.same_dims(labels)) {
    throw ValidationError("label map does not match image dimensions");
  }
  std::vector<std::pair<ClassId, RgbImage>> out;
  for (ClassId id : present_ids(labels)) {
    RgbImage masked(image.width(), image.height());
    auto src = image.data();
    auto dst = masked.data();
    auto ids = labels.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != id) continue;
      dst[3 * i] = src[3 * i];
      dst[3 * i + 1] = src[3 * i + 1];
      dst[3 * i + 2] = src[3 * i + 2];
    }
    out.emplace_back(id, std::move(masked));
  }
  return out;
}

namespace {

// 4-connected components of one class; `id` is per pixel (unused outside
// the class), `boxes` per component.
struct Components {
  std::vector<std::size_t> id;
  std::vector<Box> boxes;
};

Components label_components(const LabelMap& labels, ClassId class_id) {
  const int w = labels.width();
  const int h = labels.height();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  Components c{std::vector<std::size_t>(labels.pixel_count(), kUnset), {}};
  std::vector<Point> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t start = static_cast<std::size_t>(y0) * w + x0;
      if (labels.at(x0, y0) != class_id || c.id[start] != kUnset) continue;
      const std::size_t comp = c.boxes.size();
      Box box{x0, y0, x0 + 1, y0 + 1};
      c.id[start] = comp;
      stack.assign(1, Point{x0, y0});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        box.x_min = std::min(box.x_min, p.x);
        box.y_min = std::min(box.y_min, p.y);
        box.x_max = std::max(box.x_max, p.x + 1);
        box.y_max = std::max(box.y_max, p.y + 1);
        const Point next[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const Point& q : next) {
          if (!labels.in_bounds(q.x, q.y) || labels.at(q.x, q.y) != class_id) continue;
          const std::size_t k = static_cast<std::size_t>(q.y) * w + q.x;
          if (c.id[k] != kUnset) continue;
          c.id[k] = comp;
          stack.push_back(q);
        }
      }
      c.boxes.push_back(box);
    }
  }
  return c;
}

}  // namespace

std::vector<InstanceDetection> detect_instances(const RgbImage& image,
                                                const LabelMap& labels,
                                                const BoxPredictor& predictor) {
  std::vector<InstanceDetection> out;
  for (auto& [class_id, masked] : per_class_masked_images(image, labels)) {
    std::vector<Box> boxes;
    try {
      boxes = predictor.predict(masked);
    } catch (const Error& ex) {
      throw Error(ex.kind(), "box predictor '" + predictor.name() +
                                 "' failed on class " +
                                 std::to_string(class_id) + ": " + ex.what());
    }
    for (const Box& b : boxes) {
      if (!b.fits_within(image.width(), image.height())) {
        throw ValidationError("box predictor '" + predictor.name() +
                              "' returned out-of-bounds box " + to_string(b) +
                              " for class " + std::to_string(class_id));
      }
    }
    std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
      return std::tie(a.y_min, a.x_min, a.y_max, a.x_max) <
             std::tie(b.y_min, b.x_min, b.y_max, b.x_max);
    });

    std::vector<InstanceDetection> instances(boxes.size());
    std::vector<bool> nonempty(boxes.size(), false);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      instances[i].class_id = class_id;
      instances[i].box = boxes[i];
      instances[i].mask = BinaryMask(image.width(), image.height());
    }
    const Components comps = label_components(labels, class_id);
    std::vector<std::size_t> candidates;
    for (int y = 0; y < labels.height(); ++y) {
      for (int x = 0; x < labels.width(); ++x) {
        if (labels.at(x, y) != class_id) continue;
        candidates.clear();
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          if (boxes[i].contains(x, y)) candidates.push_back(i);
        }
        if (candidates.empty()) continue;
        // A contested pixel prefers boxes that hold its whole blob.
        if (candidates.size() > 1) {
          const Box& blob = comps.boxes[comps.id[static_cast<std::size_t>(y) * labels.width() + x]];
          std::vector<std::size_t> holding;
          for (std::size_t i : candidates) {
            if (intersect(boxes[i], blob) == blob) holding.push_back(i);
          }
          if (!holding.empty()) candidates.swap(holding);
        }
        // Doubled coordinates keep centre distances integral.
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::size_t owner = boxes.size();
        for (std::size_t i : candidates) {
          const Box& b = boxes[i];
          const std::int64_t dx = 2 * x + 1 - (b.x_min + b.x_max);
          const std::int64_t dy = 2 * y + 1 - (b.y_min + b.y_max);
          const std::int64_t d = dx * dx + dy * dy;
          if (d < best) {
            best = d;
            owner = i;
          }
        }
        instances[owner].mask.at(x, y) = 1;
        nonempty[owner] = true;
      }
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (nonempty[i]) out.push_back(std::move(instances[i]));
    }
  }
  return out;
}

std::string encode_mask_rle(const BinaryMask& mask, const Box& region) {
  std::ostringstream out;
  std::uint8_t current = 0;
  std::size_t run = 0;
  bool first = true;
  auto flush = [&]() {
    if (!first) out << ' ';
    out << run;
    first = false;
  };
  for (int y = region.y_min; y < region.y_max; ++y) {
    for (int x = region.x_min; x < region.x_max; ++x) {
      const std::uint8_t v = mask.at(x, y) != 0 ? 1 : 0;
      if (v != current) {
        flush();
        current = v;
        run = 0;
      }
      ++run;
    }
  }
  flush();
  return out.str();
}

BinaryMask decode_mask_rle(std::string_view rle, const Box& region, int width,
                           int height) {
  if (!region.fits_within(width, height)) {
    throw ValidationError("RLE region " + to_string(region) +
                          " outside image");
  }
  BinaryMask mask(width, height);
  std::istringstream in{std::string(rle)};
  const std::int64_t total = region.area();
  std::int64_t pos = 0;
  std::uint8_t value = 0;
  long long run = 0;
  while (in >> run) {
    if (run < 0 || pos + run > total) {
      throw ValidationError("RLE runs exceed the region size");
    }
    for (long long i = 0; i < run; ++i, ++pos) {
      if (value == 0) continue;
      const int x = region.x_min + static_cast<int>(pos % region.width());
      const int y = region.y_min + static_cast<int>(pos / region.width());
      mask.at(x, y) = 1;
    }
    value ^= 1;
  }
  if (!in.eof()) throw ValidationError("RLE contains a non-numeric token");
  if (pos != total) throw ValidationError("RLE runs do not cover the region");
  return mask;
}

std::string to_json_line(const InstanceDetection& d) {
  json j = {{"class_id", d.class_id},
            {"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}},
            {"mask_rle", encode_mask_rle(d.mask, d.box)}};
  if (d.score) j["score"] = *d.score;
  return j.dump();
}

InstanceDetection instance_from_json(std::string_view line, int width,
                                     int height) {
  InstanceDetection d;
  try {
    const json j = json::parse(line);
    d.class_id = j.at("class_id").get<ClassId>();
    auto b = j.at("box").get<std::vector<int>>();
    if (b.size() != 4) throw ValidationError("box needs 4 coordinates");
    d.box = Box{b[0], b[1], b[2], b[3]};
    d.mask = decode_mask_rle(j.at("mask_rle").get<std::string>(), d.box, width,
                             height);
    if (j.contains("score")) d.score = j.at("score").get<double>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed detection: ") + ex.what());
  }
  return d;
}

}  // namespace clutterlab
