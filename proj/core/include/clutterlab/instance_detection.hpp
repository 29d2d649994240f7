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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clutterlab/predictors.hpp"
#include "clutterlab/raster.hpp"

namespace clutterlab {

struct InstanceDetection {
  ClassId class_id = 0;
  Box box;
  BinaryMask mask;  // full-image size, true only inside `box`
  std::optional<double> score;
};

// For each class present (ascending id): the input image where the label
// equals the class, black elsewhere. Throws ValidationError on a size
// mismatch.
std::vector<std::pair<ClassId, RgbImage>> per_class_masked_images(
    const RgbImage& image, const LabelMap& labels);

// Runs the box predictor on each class's masked image. Each box becomes an
// instance holding the class pixels inside it. A pixel inside several boxes
// of its class goes to one that contains its whole connected blob when such
// a box exists, choosing the nearest centre among the remaining candidates
// (ties to the earlier box in (y_min, x_min, y_max, x_max) order). Empty
// instances are dropped.
std::vector<InstanceDetection> detect_instances(const RgbImage& image,
                                                const LabelMap& labels,
                                                const BoxPredictor& predictor);

// Row-major run lengths over the box region, starting with a (possibly
// zero-length) run of false pixels: "3 5 2 ..." alternates false/true.
std::string encode_mask_rle(const BinaryMask& mask, const Box& region);
BinaryMask decode_mask_rle(std::string_view rle, const Box& region, int width,
                           int height);

// {"class_id":7,"box":[x_min,y_min,x_max,y_max],"mask_rle":"..."}
std::string to_json_line(const InstanceDetection& detection);
InstanceDetection instance_from_json(std::string_view line, int width,
                                     int height);

}  // namespace clutterlab
