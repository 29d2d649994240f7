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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"
#include "clutterlab/raster.hpp"
#include "clutterlab/rng.hpp"
#include "clutterlab/sample_cache.hpp"

namespace clutterlab {

enum class BasePolicy { kDatasetImage, kBackgroundPool, kBlank };

std::string_view to_string(BasePolicy policy);
BasePolicy base_policy_from_string(std::string_view s);

struct ClutterSpec {
  int grid_size = 3;
  double visibility_threshold = 0.25;
  BasePolicy base_policy = BasePolicy::kDatasetImage;
  bool jitter = false;
  std::uint64_t seed = 0;
  // Canvas used by BasePolicy::kBlank.
  int blank_width = 256;
  int blank_height = 256;
  Rgb blank_color{};

  // Throws ValidationError unless grid_size >= 1 and 0 < threshold <= 1.
  void validate() const;

  std::string to_json() const;
  static ClutterSpec from_json(std::string_view text);
};

class DegenerateGridError : public ValidationError {
 public:
  DegenerateGridError(int grid_size, int width, int height)
      : ValidationError("grid size " + std::to_string(grid_size) +
                        " exceeds canvas " + std::to_string(width) + "x" +
                        std::to_string(height)) {}
};

// Row-major M*M anchors at round((i + 0.5) * size / M).
// Throws DegenerateGridError when M > min(width, height).
std::vector<Point> grid_centers(int width, int height, int grid_size);

// The pixels of one class in one source sample.
struct ObjectCutout {
  ClassId class_id = 0;
  Box extent;                 // tight box in source coordinates
  std::vector<Point> pixels;  // source coordinates, row-major
  SamplePtr sample;           // pixel colours; may be null for shape-only use

  // Extracts every pixel labelled `class_id`. Throws ValidationError when
  // the sample has none.
  static ObjectCutout from_sample(SamplePtr sample, ClassId class_id);
};

inline constexpr int kBaseCellIndex = -1;
inline constexpr int kBaseZOrder = -1;

struct Placement {
  ClassId class_id = 0;
  std::string source_sample_id;
  int cell_index = 0;  // kBaseCellIndex for the base image's own object
  Point anchor;
  int z_order = 0;  // higher occludes lower
  std::size_t total_pixels = 0;
  std::size_t visible_pixels = 0;

  std::shared_ptr<const ObjectCutout> cutout;

  // Translation from source to canvas coordinates: the centre of the
  // cutout's tight box lands on the anchor. Requires a cutout.
  Point offset() const;

  // Binds a cutout and fills total_pixels.
  void attach(std::shared_ptr<const ObjectCutout> shape);
};

struct ScenePlan {
  int width = 0;
  int height = 0;
  int grid_size = 0;
  std::optional<std::string> base_sample_id;
  // Base object (when the base is a dataset image) first, then one
  // placement per grid cell in visit order.
  std::vector<Placement> placements;
};

// Draws the base and, for each grid cell, a class uniformly over the
// registry and an image uniformly over that class. Classes without images
// are redrawn up to K times before failing. Cutouts are not attached.
ScenePlan plan_scene(const ClassRegistry& registry, const SampleSource& source,
                     const ClutterSpec& spec, Rng& rng);

// Owner index of every canvas pixel after painting `placements` in
// ascending z (-1 where nothing lands). Placements need cutouts.
std::vector<std::int32_t> z_buffer(const std::vector<Placement>& placements,
                                   int width, int height);

// Removes placements whose visible fraction falls below `threshold`,
// recomputing until nothing more is removed. Survivors come back in
// ascending z with visible_pixels filled. Off-canvas pixels count as hidden.
std::vector<Placement> simulate_visibility(std::vector<Placement> placements,
                                           int width, int height,
                                           double threshold);

struct RenderedScene {
  RgbImage image;
  LabelMap labels;
  std::vector<BoxRecord> boxes;  // tight box of each survivor's visible pixels
};

// Copies each survivor's object pixels onto `base` in ascending z and
// writes the matching label map. Throws ValidationError when a cutout has no
// source sample.
RenderedScene render_scene(const RgbImage& base,
                           const std::vector<Placement>& survivors);

struct SceneTimings {
  double decode_ms = 0.0;
  double transfer_ms = 0.0;
  double visibility_ms = 0.0;
  double total_ms = 0.0;
};

struct SynthesisResult {
  AnnotatedSample sample;
  ScenePlan plan;
  std::vector<Placement> survivors;
  SceneTimings timings;
};

// plan -> fetch sources -> visibility -> render. Seeded by spec.seed.
SynthesisResult synthesize_scene(const ClassRegistry& registry,
                                 const SampleSource& source,
                                 const ClutterSpec& spec);

AnnotatedSample synthesize(const ClassRegistry& registry,
                           const SampleSource& source,
                           const ClutterSpec& spec);

}  // namespace clutterlab
