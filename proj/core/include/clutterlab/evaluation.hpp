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

#include <cstdint>
#include <string>
#include <vector>

#include "clutterlab/raster.hpp"

namespace clutterlab {

struct ClassIoU {
  ClassId class_id = 0;
  std::uint64_t intersection = 0;
  std::uint64_t union_size = 0;
  double iou = 0.0;  // intersection / union_size
};

struct IoUReport {
  std::vector<ClassIoU> per_class;  // ascending class id
  double mean = 0.0;
  std::size_t classes_evaluated = 0;

  std::string to_json() const;
};

// Per-class pixel IoU, background (0) excluded. Classes absent from both
// maps are not evaluated; with no classes at all the mean is 1.
IoUReport mask_miou(const LabelMap& pred, const LabelMap& truth);

struct AreaRatio {
  std::int64_t intersection = 0;
  std::int64_t union_area = 0;
};

AreaRatio box_overlap(const Box& a, const Box& b);

double box_iou(const Box& a, const Box& b);

// Greedy one-to-one matching by descending IoU, ties to the lower
// prediction index and then the lower truth index. The matched sum is
// divided by max(|preds|, |truths|), so unmatched boxes count as 0. Both
// lists empty gives 1.
double box_set_miou(const std::vector<Box>& preds,
                    const std::vector<Box>& truths);

}  // namespace clutterlab
