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

#include <cmath>
#include <numeric>
#include <set>

#include "clutterlab/augmentation.hpp"
#include "clutterlab/error.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace clutterlab {
namespace {

AugmentSpec no_op_spec() {
  AugmentSpec s;
  s.color_jitter_prob = 0.0;
  s.rotation_range = 0.0;
  s.blur_prob = 0.0;
  s.mirror_prob = 0.0;
  s.crop.reset();
  return s;
}

AnnotatedSample square_sample(int size, Box square, ClassId id) {
  Rng rng(17);
  AnnotatedSample s;
  s.image = testing::random_image(rng, size, size);
  s.labels = LabelMap(size, size);
  testing::fill_rect(s.labels, square, id);
  s.boxes.push_back({id, square});
  return s;
}

double label_iou(const LabelMap& a, const LabelMap& b, ClassId id) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const bool x = a.data()[i] == id, y = b.data()[i] == id;
    inter += x && y;
    uni += x || y;
  }
  return uni ? static_cast<double>(inter) / uni : 1.0;
}

TEST(AugmentTest, AllOffIsIdentity) {
  Rng data(1);
  const AnnotatedSample s = testing::random_sample(data, 40, 30, 3);
  Rng rng(2);
  EXPECT_EQ(apply(s, no_op_spec(), rng), s);
}

TEST(AugmentTest, MirrorTwiceRestores) {
  Rng data(3);
  const AnnotatedSample s = testing::random_sample(data, 33, 21, 4);
  const auto once = mirror(s.image, s.labels);
  EXPECT_NE(once.first, s.image);
  const auto twice = mirror(once.first, once.second);
  EXPECT_EQ(twice.first, s.image);
  EXPECT_EQ(twice.second, s.labels);

  AugmentSpec spec = no_op_spec();
  spec.mirror_prob = 1.0;
  Rng rng(4);
  const AnnotatedSample m = apply(apply(s, spec, rng), spec, rng);
  EXPECT_EQ(m, s);
}

TEST(AugmentTest, MirrorRecomputesBoxes) {
  const AnnotatedSample s = square_sample(50, Box{5, 10, 20, 30}, 2);
  AugmentSpec spec = no_op_spec();
  spec.mirror_prob = 1.0;
  Rng rng(5);
  const AnnotatedSample m = apply(s, spec, rng);
  ASSERT_EQ(m.boxes.size(), 1u);
  EXPECT_EQ(m.boxes[0].box, (Box{30, 10, 45, 30}));
}

TEST(RotateTest, ZeroIsIdentityAndLargeAnglesRejected) {
  Rng data(6);
  const AnnotatedSample s = testing::random_sample(data, 25, 25, 2);
  const auto r = rotate(s.image, s.labels, 0.0);
  EXPECT_EQ(r.first, s.image);
  EXPECT_EQ(r.second, s.labels);
  EXPECT_THROW(rotate(s.image, s.labels, 46.0), ValidationError);
}

TEST(RotateTest, RoundTripKeepsSquare) {
  const AnnotatedSample s = square_sample(200, Box{50, 50, 150, 150}, 3);
  const auto fwd = rotate(s.image, s.labels, 10.0);
  const auto back = rotate(fwd.first, fwd.second, -10.0);
  EXPECT_GE(label_iou(back.second, s.labels, 3), 0.95);
}

TEST(RotateTest, RectangleAreaPreserved) {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const int w = 20 + static_cast<int>(rng.uniform_index(60));
    const int h = 20 + static_cast<int>(rng.uniform_index(60));
    const int x0 = 100 - w / 2, y0 = 100 - h / 2;
    const AnnotatedSample s = square_sample(200, Box{x0, y0, x0 + w, y0 + h}, 1);
    const auto r = rotate(s.image, s.labels, 10.0);
    const double before = static_cast<double>(w) * h;
    const double after = static_cast<double>(count_true(mask_of(r.second, 1)));
    EXPECT_NEAR(after / before, 1.0, 0.02) << w << "x" << h;
  }
}

TEST(RotateTest, NeverInventsLabelIds) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const AnnotatedSample s = testing::random_sample(rng, 40, 40, 5);
    const auto r = rotate(s.image, s.labels, rng.uniform(-45.0, 45.0));
    const auto before = present_ids(s.labels);
    for (ClassId id : present_ids(r.second)) {
      EXPECT_TRUE(std::find(before.begin(), before.end(), id) != before.end());
    }
  }
}

TEST(BlurTest, ZeroSigmaAndConstantImagesUnchanged) {
  Rng rng(9);
  const RgbImage img = testing::random_image(rng, 17, 13);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
  const RgbImage flat(23, 19, 143);
  for (double sigma : {0.5, 1.0, 3.0, 7.5}) EXPECT_EQ(gaussian_blur(flat, sigma), flat);
}

TEST(BlurTest, ImpulseCentreMatchesDirectKernel) {
  const int n = 41;
  std::vector<float> plane(n * n, 0.0f);
  plane[(n / 2) * n + n / 2] = 1.0f;
  const std::vector<float> out = blur_plane(plane, n, n, 3.0);
  // Direct evaluation of the sampled, normalized 1-D Gaussian (radius 3
  // sigma); the separable 2-D centre weight is its square.
  double sum = 0.0;
  for (int i = -9; i <= 9; ++i) sum += std::exp(-(i * i) / 18.0);
  const double g0 = 1.0 / sum;
  EXPECT_NEAR(out[(n / 2) * n + n / 2], g0 * g0, 1e-3);
  EXPECT_NEAR(std::accumulate(out.begin(), out.end(), 0.0), 1.0, 1e-4);
}

TEST(AugmentTest, RandomPipelinesKeepSamplesValid) {
  Rng rng(10);
  AugmentSpec spec;
  spec.crop = Size{48, 40};
  spec.scale_range = {0.8, 1.25};
  spec.blur_sigma = 1.0;
  for (int i = 0; i < 30; ++i) {
    const AnnotatedSample s = testing::random_sample(rng, 64, 64, 3);
    const AnnotatedSample a = apply(s, spec, rng);
    EXPECT_EQ(a.image.width(), 48);
    EXPECT_EQ(a.image.height(), 40);
    EXPECT_EQ(find_sample_defect(a), std::nullopt);
  }
}

TEST(AugmentTest, OversizedCropIsRejected) {
  Rng rng(11);
  const AnnotatedSample s = testing::random_sample(rng, 64, 64, 1);
  AugmentSpec spec = no_op_spec();
  spec.crop = Size{512, 512};
  EXPECT_THROW(apply(s, spec, rng), ValidationError);
  EXPECT_EQ(AugmentSpec::from_json(AugmentSpec{}.to_json()).crop, (Size{512, 512}));
}

}  // namespace
}  // namespace clutterlab
