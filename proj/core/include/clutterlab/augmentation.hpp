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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clutterlab/dataset_io.hpp"
#include "clutterlab/raster.hpp"
#include "clutterlab/rng.hpp"

namespace clutterlab {

struct Size {
  int width = 0;
  int height = 0;

  friend bool operator==(const Size&, const Size&) = default;
};

// Training-time augmentation parameters. Defaults follow the tutor training
// recipe: each colour op fires with probability 0.5, rotation within
// +-10 degrees, blur sigma 3, 512x512 crops.
struct AugmentSpec {
  // Probability applied independently to each of hue, saturation,
  // brightness and contrast.
  double color_jitter_prob = 0.5;
  double hue_range = 0.1;         // fraction of a full hue turn
  double saturation_range = 0.1;  // relative scale deviation
  double brightness_range = 0.1;  // fraction of full scale
  double contrast_range = 0.1;    // relative scale deviation
  double rotation_range = 10.0;   // degrees, symmetric
  double blur_prob = 0.5;
  double blur_sigma = 3.0;
  double mirror_prob = 0.5;
  std::pair<double, double> scale_range{1.0, 1.0};
  std::optional<Size> crop = Size{512, 512};
  std::uint64_t seed = 0;

  void validate() const;

  std::string to_json() const;
  static AugmentSpec from_json(std::string_view text);
};

// Ops run in a fixed order: colour, mirror, scale, rotate, blur, crop.
// Photometric ops touch only the image; geometric ops move the image and the
// label map together, and boxes are re-derived per instance afterwards.
// Throws ValidationError when the crop exceeds the (scaled) image.
AnnotatedSample apply(const AnnotatedSample& sample, const AugmentSpec& spec,
                      Rng& rng);

// Rotation by `degrees` about the image centre (counter-clockwise in image
// coordinates with y pointing down). Bilinear for pixels, nearest for labels,
// uncovered area filled with 0. |degrees| must not exceed 45.
std::pair<RgbImage, LabelMap> rotate(const RgbImage& image,
                                     const LabelMap& labels, double degrees);

// Horizontal flip.
std::pair<RgbImage, LabelMap> mirror(const RgbImage& image,
                                     const LabelMap& labels);

// Bilinear pixels, nearest labels.
std::pair<RgbImage, LabelMap> rescale(const RgbImage& image,
                                      const LabelMap& labels, Size size);

// Normalized 1-D kernel of radius ceil(3 sigma); {1} for sigma 0.
std::vector<double> gaussian_kernel(double sigma);

// Separable blur over one float plane, edges clamped.
std::vector<float> blur_plane(std::span<const float> plane, int width,
                              int height, double sigma);

RgbImage gaussian_blur(const RgbImage& image, double sigma);

}  // namespace clutterlab
