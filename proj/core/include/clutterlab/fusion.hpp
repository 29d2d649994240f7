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

#include <string_view>
#include <utility>

#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"
#include "clutterlab/raster.hpp"

namespace clutterlab {

// Relative trust in the predicted mask versus the predicted box. Only the
// ordering of the two values matters.
struct FusionPolicy {
  int mask_priority = 1;
  int box_priority = 1;

  friend bool operator==(const FusionPolicy&, const FusionPolicy&) = default;
};

enum class FusionRule { kBoxOnly, kIntersection, kMaskOnly };

std::string_view to_string(FusionRule rule);

// Which branch a policy selects; exactly one applies for any pair.
FusionRule select_rule(const FusionPolicy& policy) noexcept;

struct FusedAnnotation {
  Box final_box;
  BinaryMask final_mask;  // empty outside final_box
  FusionRule rule_applied = FusionRule::kIntersection;
};

// Tight box around the true pixels. Throws EmptyMaskError.
Box box_from_mask(const BinaryMask& mask);

// Combines a class-agnostic mask and box:
//   mask_priority <  box_priority : region is the predicted box
//   mask_priority == box_priority : region is box_from_mask(mask) ∩ box
//   mask_priority >  box_priority : region is box_from_mask(mask)
// The dense mask is the predicted mask clipped to the region, or the whole
// region when that clip is empty. Throws EmptyFusionError when the equal-
// priority boxes are disjoint, EmptyMaskError when a mask-derived branch
// gets an empty mask, and ValidationError when `box` is outside the mask.
FusedAnnotation fuse(const BinaryMask& mask, const Box& box,
                     const FusionPolicy& policy);

struct LabeledFragment {
  LabelMap labels;
  BoxRecord box;
};

// Paints `class_id` over the fused mask. Throws ValidationError for an
// unregistered class or an empty fused mask.
LabeledFragment assign_label(const FusedAnnotation& fused, ClassId class_id,
                             const ClassRegistry& registry);

}  // namespace clutterlab
