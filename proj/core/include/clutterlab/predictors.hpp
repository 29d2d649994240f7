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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/dataset_io.hpp"
#include "clutterlab/raster.hpp"

namespace clutterlab {

// Class-agnostic foreground segmentation (the tutor's mask head).
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;

  // Output has the input's dimensions.
  virtual BinaryMask predict(const RgbImage& image) const = 0;

  // False when predict() may not be called concurrently; the pipeline then
  // gives each worker its own clone().
  virtual bool shareable() const { return true; }
  virtual std::unique_ptr<MaskPredictor> clone() const = 0;
  virtual std::string name() const = 0;
};

// Class-agnostic instance boxes (the tutor's box head).
class BoxPredictor {
 public:
  virtual ~BoxPredictor() = default;

  // Boxes lie within the image bounds.
  virtual std::vector<Box> predict(const RgbImage& image) const = 0;

  virtual bool shareable() const { return true; }
  virtual std::unique_ptr<BoxPredictor> clone() const = 0;
  virtual std::string name() const = 0;
};

struct ConsumerMetrics {
  std::size_t consumed = 0;
  std::size_t defects = 0;
  std::size_t single_instance = 0;
  std::size_t synthesized = 0;
  std::size_t duplicate_synthesized = 0;
  double elapsed_s = 0.0;
  double rate_per_s = 0.0;
  std::vector<std::string> defect_messages;  // first few only
};

// The learner fed by the pipeline (the child network).
class ChildConsumer {
 public:
  virtual ~ChildConsumer() = default;

  virtual void consume(std::span<const AnnotatedSample> batch) = 0;
  virtual ConsumerMetrics metrics() const = 0;
};

// Foreground wherever some channel differs from `background` by more than
// `tolerance`.
BinaryMask chroma_oracle_mask(const RgbImage& image, Rgb background,
                              int tolerance);

// One tight box per 4-connected component with at least `min_area` pixels,
// sorted by (y_min, x_min, y_max, x_max).
std::vector<Box> connected_component_boxes(const BinaryMask& mask,
                                           std::size_t min_area);

inline constexpr std::size_t kDefaultMinComponentArea = 20;

class ChromaOracleMaskPredictor final : public MaskPredictor {
 public:
  ChromaOracleMaskPredictor(Rgb background, int tolerance)
      : background_(background), tolerance_(tolerance) {}

  BinaryMask predict(const RgbImage& image) const override {
    return chroma_oracle_mask(image, background_, tolerance_);
  }
  std::unique_ptr<MaskPredictor> clone() const override {
    return std::make_unique<ChromaOracleMaskPredictor>(*this);
  }
  std::string name() const override { return "chroma_oracle"; }

 private:
  Rgb background_;
  int tolerance_;
};

// Thresholds against a background colour, then boxes the components.
class ComponentBoxPredictor final : public BoxPredictor {
 public:
  ComponentBoxPredictor(Rgb background, int tolerance,
                        std::size_t min_area = kDefaultMinComponentArea)
      : background_(background), tolerance_(tolerance), min_area_(min_area) {}

  std::vector<Box> predict(const RgbImage& image) const override {
    return connected_component_boxes(
        chroma_oracle_mask(image, background_, tolerance_), min_area_);
  }
  std::unique_ptr<BoxPredictor> clone() const override {
    return std::make_unique<ComponentBoxPredictor>(*this);
  }
  std::string name() const override { return "connected_components"; }

 private:
  Rgb background_;
  int tolerance_;
  std::size_t min_area_;
};

// Stored ground truth keyed by a hash of the pixel data.
class FixtureStore {
 public:
  // The mask is every labelled pixel; boxes are the sample's boxes.
  void remember(const AnnotatedSample& sample);

  // Empty mask / no boxes for images never remembered.
  BinaryMask mask_for(const RgbImage& image) const;
  std::vector<Box> boxes_for(const RgbImage& image) const;

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    BinaryMask mask;
    std::vector<Box> boxes;
  };
  std::map<std::uint64_t, Entry> entries_;
};

class StoredFixtureMaskPredictor final : public MaskPredictor {
 public:
  explicit StoredFixtureMaskPredictor(std::shared_ptr<const FixtureStore> store)
      : store_(std::move(store)) {}

  BinaryMask predict(const RgbImage& image) const override {
    return store_->mask_for(image);
  }
  std::unique_ptr<MaskPredictor> clone() const override {
    return std::make_unique<StoredFixtureMaskPredictor>(*this);
  }
  std::string name() const override { return "stored_fixture"; }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

class StoredFixtureBoxPredictor final : public BoxPredictor {
 public:
  explicit StoredFixtureBoxPredictor(std::shared_ptr<const FixtureStore> store)
      : store_(std::move(store)) {}

  std::vector<Box> predict(const RgbImage& image) const override {
    return store_->boxes_for(image);
  }
  std::unique_ptr<BoxPredictor> clone() const override {
    return std::make_unique<StoredFixtureBoxPredictor>(*this);
  }
  std::string name() const override { return "stored_fixture"; }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

std::uint64_t hash_image(const RgbImage& image);

// Counts what it is fed, checks every sample's invariants, and optionally
// simulates a fixed per-sample service time.
class RecordingChild final : public ChildConsumer {
 public:
  explicit RecordingChild(
      std::chrono::microseconds service_time = std::chrono::microseconds{0});

  void consume(std::span<const AnnotatedSample> batch) override;
  ConsumerMetrics metrics() const override;

  // Ids of delivered synthesized samples, in delivery order.
  std::vector<std::string> synthesized_ids() const;

  // Per delivered synthesized sample: the classes present in its labels.
  std::vector<std::vector<ClassId>> synthesized_classes() const;

 private:
  using Clock = std::chrono::steady_clock;

  std::chrono::microseconds service_time_;
  mutable std::mutex mu_;
  ConsumerMetrics metrics_;
  std::optional<Clock::time_point> first_;
  Clock::time_point last_{};
  std::set<std::string> seen_;
  std::vector<std::string> order_;
  std::vector<std::vector<ClassId>> classes_;
};

std::unique_ptr<ChildConsumer> recording_child();

// Names accepted by make_mask_predictor / make_box_predictor.
std::vector<std::string> mask_predictor_names();
std::vector<std::string> box_predictor_names();

struct PredictorOptions {
  Rgb background{0, 0, 0};
  int tolerance = 0;
  std::size_t min_area = kDefaultMinComponentArea;
  // Ground truth for "stored_fixture".
  std::shared_ptr<const FixtureStore> fixtures;
};

// Throws ValidationError listing the known names for an unknown name.
std::unique_ptr<MaskPredictor> make_mask_predictor(std::string_view name,
                                                   const PredictorOptions& opts);
std::unique_ptr<BoxPredictor> make_box_predictor(std::string_view name,
                                                 const PredictorOptions& opts);

}  // namespace clutterlab
