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

#include "clutterlab/fusion.hpp"

namespace clutterlab {

std::string_view to_string(FusionRule rule) {
  switch (rule) {
    case FusionRule::kBoxOnly:
      return "box_only";
    case FusionRule::kIntersection:
      return "intersection";
    case FusionRule::kMaskOnly:
      return "mask_only";
  }
  return "intersection";
}

FusionRule select_rule(const FusionPolicy& policy) noexcept {
  if (policy.mask_priority < policy.box_priority) return FusionRule::kBoxOnly;
  if (policy.mask_priority > policy.box_priority) return FusionRule::kMaskOnly;
  return FusionRule::kIntersection;
}

Box box_from_mask(const BinaryMask& mask) {
  auto box = tight_box(mask);
  if (!box) throw EmptyMaskError();
  return *box;
}

FusedAnnotation fuse(const BinaryMask& mask, const Box& box,
                     const FusionPolicy& policy) {
  if (mask.empty()) throw ValidationError("fusion needs a sized mask");
  if (!box.fits_within(mask.width(), mask.height())) {
    throw ValidationError("predicted box " + to_string(box) +
                          " lies outside the " + std::to_string(mask.width()) +
                          "x" + std::to_string(mask.height()) + " mask");
  }

  FusedAnnotation out;
  out.rule_applied = select_rule(policy);
  switch (out.rule_applied) {
    case FusionRule::kBoxOnly:
      out.final_box = box;
      break;
    case FusionRule::kIntersection: {
      const Box mask_box = box_from_mask(mask);
      auto overlap = intersect(mask_box, box);
      if (!overlap) {
        throw EmptyFusionError("mask extent " + to_string(mask_box) +
                               " and predicted box " + to_string(box) +
                               " are disjoint");
      }
      out.final_box = *overlap;
      break;
    }
    case FusionRule::kMaskOnly:
      out.final_box = box_from_mask(mask);
      break;
  }

  const Box& region = out.final_box;
  out.final_mask = BinaryMask(mask.width(), mask.height());
  bool any = false;
  for (int y = region.y_min; y < region.y_max; ++y) {
    for (int x = region.x_min; x < region.x_max; ++x) {
      if (mask.at(x, y) != 0) {
        out.final_mask.at(x, y) = 1;
        any = true;
      }
    }
  }
  if (!any) {
    for (int y = region.y_min; y < region.y_max; ++y) {
      for (int x = region.x_min; x < region.x_max; ++x) {
        out.final_mask.at(x, y) = 1;
      }
    }
  }
  return out;
}

LabeledFragment assign_label(const FusedAnnotation& fused, ClassId class_id,
                             const ClassRegistry& registry) {
  registry.at(class_id);
  if (fused.final_mask.empty() || count_true(fused.final_mask) == 0) {
    throw EmptyFusionError("fused mask has no pixels to label");
  }
  LabeledFragment out{LabelMap(fused.final_mask.width(),
                               fused.final_mask.height()),
                      BoxRecord{class_id, fused.final_box}};
  auto src = fused.final_mask.data();
  auto dst = out.labels.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] != 0) dst[i] = class_id;
  }
  return out;
}

}  // namespace clutterlab
