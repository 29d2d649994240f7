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

#include "clutterlab/error.hpp"
#include "clutterlab/fusion.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace clutterlab {
namespace {

// Independent extent scan: min/max over every true pixel, exclusive max.
std::optional<Box> scan_extent(const BinaryMask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return Box{x0, y0, x1 + 1, y1 + 1};
}

ClassRegistry registry_with(ClassId id) {
  ClassRegistry r;
  r.insert(id, "item");
  return r;
}

TEST(FusionTest, BoxFromMaskExamples) {
  BinaryMask full(10, 10, 1);
  EXPECT_EQ(box_from_mask(full), (Box{0, 0, 10, 10}));
  BinaryMask one(10, 10);
  one.at(3, 4) = 1;
  EXPECT_EQ(box_from_mask(one), (Box{3, 4, 4, 5}));
  EXPECT_THROW(box_from_mask(BinaryMask(5, 5)), EmptyMaskError);
}

TEST(FusionTest, BoxFromMaskMatchesScanOnSparseMasks) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const BinaryMask m = testing::random_mask(rng, 1 + rng.uniform_index(30),
                                              1 + rng.uniform_index(30), 0.02);
    const auto expected = scan_extent(m);
    if (!expected) {
      EXPECT_THROW(box_from_mask(m), EmptyMaskError);
    } else {
      EXPECT_EQ(box_from_mask(m), *expected);
    }
  }
}

TEST(FusionTest, IntersectExamples) {
  EXPECT_EQ(intersect(Box{0, 0, 4, 4}, Box{2, 2, 6, 6}), (Box{2, 2, 4, 4}));
  EXPECT_EQ(intersect(Box{0, 0, 2, 2}, Box{2, 2, 6, 6}), std::nullopt);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Box a = testing::random_box(rng, 50, 50);
    EXPECT_EQ(intersect(a, a), a);
  }
}

TEST(FusionTest, RuleSelection) {
  EXPECT_EQ(select_rule({0, 1}), FusionRule::kBoxOnly);
  EXPECT_EQ(select_rule({1, 1}), FusionRule::kIntersection);
  EXPECT_EQ(select_rule({1, 0}), FusionRule::kMaskOnly);
}

TEST(FusionTest, BoxPriorityUsesPredictedBox) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const BinaryMask m = testing::random_mask(rng, 20, 20, 0.1);
    const Box b = testing::random_box(rng, 20, 20);
    EXPECT_EQ(fuse(m, b, {0, 1}).final_box, b);
  }
}

TEST(FusionTest, MaskPriorityUsesMaskExtent) {
  BinaryMask m(12, 12);
  m.at(2, 3) = m.at(7, 9) = 1;
  const Box extent{2, 3, 8, 10};
  for (const Box& b : {Box{0, 0, 1, 1}, Box{5, 5, 12, 12}, Box{0, 0, 12, 12}}) {
    const FusedAnnotation f = fuse(m, b, {1, 0});
    EXPECT_EQ(f.final_box, extent);
    EXPECT_EQ(f.rule_applied, FusionRule::kMaskOnly);
  }
}

TEST(FusionTest, EqualPriorityIdenticalInputsKeepMask) {
  BinaryMask m(10, 10);
  testing::fill_rect(m, Box{2, 2, 7, 6});
  m.at(3, 3) = 0;
  const FusedAnnotation f = fuse(m, Box{2, 2, 7, 6}, {1, 1});
  EXPECT_EQ(f.final_box, (Box{2, 2, 7, 6}));
  EXPECT_EQ(f.final_mask, m);
}

TEST(FusionTest, EqualPriorityClipsToIntersection) {
  BinaryMask m(12, 4);
  testing::fill_rect(m, Box{0, 0, 8, 4});
  const FusedAnnotation f = fuse(m, Box{4, 0, 12, 4}, {1, 1});
  EXPECT_EQ(f.final_box, (Box{4, 0, 8, 4}));
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 12; ++x) {
      EXPECT_EQ(f.final_mask.at(x, y), (x >= 4 && x < 8) ? 1 : 0);
    }
  }
}

TEST(FusionTest, DisjointIntersectionIsAnError) {
  BinaryMask m(10, 10);
  m.at(1, 1) = 1;
  EXPECT_THROW(fuse(m, Box{5, 5, 9, 9}, {1, 1}), EmptyFusionError);
  EXPECT_THROW(fuse(BinaryMask(10, 10), Box{5, 5, 9, 9}, {2, 2}), EmptyMaskError);
  EXPECT_THROW(fuse(m, Box{5, 5, 11, 9}, {1, 1}), ValidationError);
}

TEST(FusionTest, AssignLabelFillsMaskPixels) {
  BinaryMask m(6, 6);
  testing::fill_rect(m, Box{1, 1, 5, 4});
  const FusedAnnotation f = fuse(m, Box{1, 1, 5, 4}, {1, 1});
  const LabeledFragment frag = assign_label(f, 7, registry_with(7));
  EXPECT_EQ(frag.box.class_id, 7);
  EXPECT_EQ(frag.box.box, (Box{1, 1, 5, 4}));
  EXPECT_EQ(tight_box(frag.labels, 7), (Box{1, 1, 5, 4}));
  EXPECT_EQ(count_true(mask_of(frag.labels, 7)), 12u);
  EXPECT_THROW(assign_label(f, 8, registry_with(7)), ValidationError);
  EXPECT_THROW(assign_label(FusedAnnotation{Box{0, 0, 1, 1}, BinaryMask(6, 6)}, 7,
                            registry_with(7)),
               EmptyFusionError);
}

TEST(FusionTest, LabelCountEqualsMaskCount) {
  Rng rng(4);
  const ClassRegistry reg = registry_with(3);
  for (int i = 0; i < 200; ++i) {
    BinaryMask m = testing::random_mask(rng, 16, 16, 0.3);
    m.at(0, 0) = 1;
    const FusedAnnotation f = fuse(m, testing::random_box(rng, 16, 16), {1, 0});
    const LabeledFragment frag = assign_label(f, 3, reg);
    EXPECT_EQ(count_true(mask_of(frag.labels, 3)), count_true(f.final_mask));
  }
}

}  // namespace
}  // namespace clutterlab
