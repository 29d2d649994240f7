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

#include "clutterlab/predictors.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <tuple>

namespace clutterlab {

BinaryMask chroma_oracle_mask(const RgbImage& image, Rgb background,
                              int tolerance) {
  BinaryMask mask(image.width(), image.height());
  auto px = image.data();
  auto out = mask.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int dr = std::abs(px[3 * i] - background.r);
    const int dg = std::abs(px[3 * i + 1] - background.g);
    const int db = std::abs(px[3 * i + 2] - background.b);
    out[i] = std::max({dr, dg, db}) > tolerance ? 1 : 0;
  }
  return mask;
}

std::vector<Box> connected_component_boxes(const BinaryMask& mask,
                                           std::size_t min_area) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> visited(mask.pixel_count(), 0);
  std::vector<std::pair<int, int>> stack;
  std::vector<Box> boxes;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t start = static_cast<std::size_t>(y0) * w + x0;
      if (mask.at(x0, y0) == 0 || visited[start]) continue;
      visited[start] = 1;
      stack.assign(1, {x0, y0});
      Box box{x0, y0, x0 + 1, y0 + 1};
      std::size_t area = 0;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        ++area;
        box.x_min = std::min(box.x_min, x);
        box.y_min = std::min(box.y_min, y);
        box.x_max = std::max(box.x_max, x + 1);
        box.y_max = std::max(box.y_max, y + 1);
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (!mask.in_bounds(nx[k], ny[k])) continue;
          const std::size_t idx = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (mask.at(nx[k], ny[k]) == 0 || visited[idx]) continue;
          visited[idx] = 1;
          stack.push_back({nx[k], ny[k]});
        }
      }
      if (area >= min_area) boxes.push_back(box);
    }
  }
  std::stable_sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
    return std::tie(a.y_min, a.x_min, a.y_max, a.x_max) <
           std::tie(b.y_min, b.x_min, b.y_max, b.x_max);
  });
  return boxes;
}

std::uint64_t hash_image(const RgbImage& image) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(image.width()));
  mix(static_cast<std::uint64_t>(image.height()));
  for (std::uint8_t b : image.data()) mix(b);
  return h;
}

void FixtureStore::remember(const AnnotatedSample& sample) {
  Entry entry;
  entry.mask = BinaryMask(sample.labels.width(), sample.labels.height());
  auto ids = sample.labels.data();
  auto out = entry.mask.data();
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = ids[i] != 0 ? 1 : 0;
  for (const BoxRecord& b : sample.boxes) entry.boxes.push_back(b.box);
  entries_[hash_image(sample.image)] = std::move(entry);
}

BinaryMask FixtureStore::mask_for(const RgbImage& image) const {
  auto it = entries_.find(hash_image(image));
  if (it == entries_.end()) return BinaryMask(image.width(), image.height());
  return it->second.mask;
}

std::vector<Box> FixtureStore::boxes_for(const RgbImage& image) const {
  auto it = entries_.find(hash_image(image));
  if (it == entries_.end()) return {};
  return it->second.boxes;
}

RecordingChild::RecordingChild(std::chrono::microseconds service_time)
    : service_time_(service_time) {}

void RecordingChild::consume(std::span<const AnnotatedSample> batch) {
  const auto start = Clock::now();
  {
    std::lock_guard lock(mu_);
    if (!first_) first_ = start;
  }
  for (const AnnotatedSample& sample : batch) {
    if (service_time_.count() > 0) std::this_thread::sleep_for(service_time_);
    auto defect = find_sample_defect(sample);
    std::lock_guard lock(mu_);
    ++metrics_.consumed;
    if (defect) {
      ++metrics_.defects;
      if (metrics_.defect_messages.size() < 16) {
        metrics_.defect_messages.push_back(*defect);
      }
    }
    if (sample.source == Provenance::kSynthesized) {
      ++metrics_.synthesized;
      if (!seen_.insert(sample.id).second) ++metrics_.duplicate_synthesized;
      order_.push_back(sample.id);
      classes_.push_back(present_ids(sample.labels));
    } else {
      ++metrics_.single_instance;
    }
  }
  std::lock_guard lock(mu_);
  last_ = Clock::now();
}

ConsumerMetrics RecordingChild::metrics() const {
  std::lock_guard lock(mu_);
  ConsumerMetrics m = metrics_;
  if (first_) {
    m.elapsed_s = std::chrono::duration<double>(last_ - *first_).count();
    m.rate_per_s = m.elapsed_s > 0.0 ? m.consumed / m.elapsed_s : 0.0;
  }
  return m;
}

std::vector<std::string> RecordingChild::synthesized_ids() const {
  std::lock_guard lock(mu_);
  return order_;
}

std::vector<std::vector<ClassId>> RecordingChild::synthesized_classes() const {
  std::lock_guard lock(mu_);
  return classes_;
}

std::unique_ptr<ChildConsumer> recording_child() {
  return std::make_unique<RecordingChild>();
}

std::vector<std::string> mask_predictor_names() {
  return {"chroma_oracle", "stored_fixture"};
}

std::vector<std::string> box_predictor_names() {
  return {"connected_components", "stored_fixture"};
}

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

std::shared_ptr<const FixtureStore> require_store(const PredictorOptions& o) {
  if (!o.fixtures) {
    throw ValidationError("stored_fixture predictor needs fixture ground truth");
  }
  return o.fixtures;
}

}  // namespace

std::unique_ptr<MaskPredictor> make_mask_predictor(
    std::string_view name, const PredictorOptions& opts) {
  if (name == "chroma_oracle") {
    return std::make_unique<ChromaOracleMaskPredictor>(opts.background,
                                                       opts.tolerance);
  }
  if (name == "stored_fixture") {
    return std::make_unique<StoredFixtureMaskPredictor>(require_store(opts));
  }
  throw ValidationError("unknown mask predictor '" + std::string(name) +
                        "'; known: " + join(mask_predictor_names()));
}

std::unique_ptr<BoxPredictor> make_box_predictor(std::string_view name,
                                                 const PredictorOptions& opts) {
  if (name == "connected_components") {
    return std::make_unique<ComponentBoxPredictor>(
        opts.background, opts.tolerance, opts.min_area);
  }
  if (name == "stored_fixture") {
    return std::make_unique<StoredFixtureBoxPredictor>(require_store(opts));
  }
  throw ValidationError("unknown box predictor '" + std::string(name) +
                        "'; known: " + join(box_predictor_names()));
}

}  // namespace clutterlab
