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

#include <map>
#include <set>

#include "clutterlab/error.hpp"
#include "clutterlab/fixtures.hpp"
#include "clutterlab/sample_cache.hpp"
#include "clutterlab/synthesis.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace clutterlab {
namespace {

// Small fixture corpus shared by the tests below.
struct Corpus {
  FixtureSpec spec;
  ClassRegistry registry;
  SampleCache cache;

  explicit Corpus(int classes = 4, int images = 5, int size = 96, int backgrounds = 2) {
    spec.classes = classes;
    spec.images_per_class = images;
    spec.width = spec.height = size;
    spec.backgrounds = backgrounds;
    spec.seed = 77;
    registry = fixture_registry(spec);
    cache = SampleCache(make_fixture_samples(spec));
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

std::shared_ptr<const ObjectCutout> rect_cutout(Box b, ClassId id) {
  auto cut = std::make_shared<ObjectCutout>();
  cut->class_id = id;
  cut->extent = b;
  for (int y = b.y_min; y < b.y_max; ++y) {
    for (int x = b.x_min; x < b.x_max; ++x) cut->pixels.push_back({x, y});
  }
  return cut;
}

Placement rect_placement(Box b, ClassId id, int z) {
  Placement p;
  p.class_id = id;
  p.z_order = z;
  p.cell_index = z;
  p.attach(rect_cutout(b, id));
  p.anchor = Point{(b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2};
  return p;
}

// Brute-force owner lookup: each placement's pixel set is rasterized in
// source coordinates once, then every query scans all placements.
class CoverOracle {
 public:
  explicit CoverOracle(const std::vector<Placement>& ps) : ps_(ps) {
    for (const Placement& p : ps) {
      const Box& e = p.cutout->extent;
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(e.width()) * e.height(), 0);
      for (const Point& q : p.cutout->pixels) {
        bits[static_cast<std::size_t>(q.y - e.y_min) * e.width() + (q.x - e.x_min)] = 1;
      }
      bits_.push_back(std::move(bits));
    }
  }

  bool covers(std::size_t i, int x, int y) const {
    const Placement& p = ps_[i];
    const Point off = p.offset();
    const int sx = x - off.x;
    const int sy = y - off.y;
    const Box& e = p.cutout->extent;
    if (!e.contains(sx, sy)) return false;
    return bits_[i][static_cast<std::size_t>(sy - e.y_min) * e.width() + (sx - e.x_min)] != 0;
  }

  // Highest z covering (x, y); later entries win ties.
  int top_owner(int x, int y) const {
    int best = -1;
    for (std::size_t i = 0; i < ps_.size(); ++i) {
      if (!covers(i, x, y)) continue;
      if (best < 0 || ps_[i].z_order >= ps_[static_cast<std::size_t>(best)].z_order) {
        best = static_cast<int>(i);
      }
    }
    return best;
  }

 private:
  const std::vector<Placement>& ps_;
  std::vector<std::vector<std::uint8_t>> bits_;
};

TEST(GridCentersTest, ClosedForms) {
  EXPECT_EQ(grid_centers(300, 300, 1), (std::vector<Point>{{150, 150}}));
  const auto c = grid_centers(300, 300, 3);
  ASSERT_EQ(c.size(), 9u);
  std::set<int> xs, ys;
  for (const Point& p : c) {
    xs.insert(p.x);
    ys.insert(p.y);
  }
  EXPECT_EQ(xs, (std::set<int>{50, 150, 250}));
  EXPECT_EQ(ys, (std::set<int>{50, 150, 250}));
  for (int m = 1; m <= 12; ++m) EXPECT_EQ(grid_centers(97, 61, m).size(), std::size_t(m * m));
  EXPECT_THROW(grid_centers(4, 40, 5), DegenerateGridError);
}

TEST(PlanSceneTest, DeterministicAndSized) {
  const Corpus& c = corpus();
  ClutterSpec spec;
  spec.grid_size = 4;
  Rng a(9), b(9);
  const ScenePlan pa = plan_scene(c.registry, c.cache, spec, a);
  const ScenePlan pb = plan_scene(c.registry, c.cache, spec, b);
  ASSERT_EQ(pa.placements.size(), pb.placements.size());
  for (std::size_t i = 0; i < pa.placements.size(); ++i) {
    EXPECT_EQ(pa.placements[i].class_id, pb.placements[i].class_id);
    EXPECT_EQ(pa.placements[i].source_sample_id, pb.placements[i].source_sample_id);
    EXPECT_EQ(pa.placements[i].anchor, pb.placements[i].anchor);
  }
  std::size_t cells = 0;
  for (const Placement& p : pa.placements) cells += p.cell_index != kBaseCellIndex;
  EXPECT_EQ(cells, 16u);
}

TEST(PlanSceneTest, ClassFrequencyIsUniform) {
  const Corpus c(10, 1, 32, 0);
  ClutterSpec spec;
  spec.grid_size = 1;
  spec.base_policy = BasePolicy::kBlank;
  spec.blank_width = spec.blank_height = 32;
  Rng rng(2024);
  constexpr int kPlans = 100000;
  std::map<ClassId, int> counts;
  for (int i = 0; i < kPlans; ++i) {
    ++counts[plan_scene(c.registry, c.cache, spec, rng).placements.at(0).class_id];
  }
  ASSERT_EQ(counts.size(), 10u);
  const double expected = kPlans / 10.0;
  double chi2 = 0.0;
  for (const auto& [id, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  // 99.9% quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.88);
}

TEST(PlanSceneTest, SkipsClassesWithoutImages) {
  const Corpus& c = corpus();
  ClassRegistry reg = c.registry;
  reg.add("never_photographed");
  ClutterSpec spec;
  spec.grid_size = 3;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    for (const Placement& p : plan_scene(reg, c.cache, spec, rng).placements) {
      EXPECT_NE(reg.at(p.class_id).name, "never_photographed");
    }
  }
}

TEST(VisibilityTest, SingleOnCanvasPlacementSurvives) {
  const auto out = simulate_visibility({rect_placement(Box{2, 2, 8, 8}, 1, 0)}, 20, 20, 1.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].visible_pixels, out[0].total_pixels);
}

TEST(VisibilityTest, FullyCoveredPlacementDrops) {
  const auto out = simulate_visibility(
      {rect_placement(Box{0, 0, 10, 10}, 1, 0), rect_placement(Box{0, 0, 10, 10}, 2, 1)},
      10, 10, 0.25);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].class_id, 2);
}

TEST(VisibilityTest, MatchesPerPixelOracleOnRandomRectangles) {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 24, h = 24;
    std::vector<Placement> ps;
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    for (int i = 0; i < n; ++i) {
      ps.push_back(rect_placement(testing::random_box(rng, w, h),
                                  static_cast<ClassId>(i + 1),
                                  static_cast<int>(rng.uniform_index(4))));
    }
    const double tau = rng.uniform(0.05, 0.9);
    const auto survivors = simulate_visibility(ps, w, h, tau);
    const CoverOracle oracle(survivors);
    // Recount every survivor against the brute-force top owner.
    std::vector<std::size_t> visible(survivors.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int o = oracle.top_owner(x, y);
        if (o >= 0) ++visible[static_cast<std::size_t>(o)];
      }
    }
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      EXPECT_EQ(survivors[i].visible_pixels, visible[i]);
      EXPECT_GE(static_cast<double>(visible[i]) / survivors[i].total_pixels, tau);
    }
  }
}

TEST(RenderTest, ZeroSurvivorsReturnsBase) {
  Rng rng(6);
  const RgbImage base = testing::random_image(rng, 12, 9);
  const RenderedScene r = render_scene(base, {});
  EXPECT_EQ(r.image, base);
  EXPECT_TRUE(present_ids(r.labels).empty());
  EXPECT_TRUE(r.boxes.empty());
}

TEST(RenderTest, CentredObjectCopiesSourcePixels) {
  const Corpus& c = corpus();
  const SamplePtr src = c.cache.fetch(fixture_sample_id(0, 0));
  Placement p;
  p.class_id = 1;
  p.attach(std::make_shared<const ObjectCutout>(ObjectCutout::from_sample(src, 1)));
  p.anchor = Point{48, 48};
  const RgbImage base(96, 96, 0);
  const RenderedScene r = render_scene(base, {p});
  const Point off = p.offset();
  for (const Point& s : p.cutout->pixels) {
    const int x = s.x + off.x, y = s.y + off.y;
    if (!r.labels.in_bounds(x, y)) continue;
    EXPECT_EQ(r.labels.at(x, y), 1);
    for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(r.image.at(x, y, ch), src->image.at(s.x, s.y, ch));
  }
  EXPECT_EQ(count_true(mask_of(r.labels, 1)), p.cutout->pixels.size());
}

TEST(SynthesizeTest, SameSeedIsByteIdentical) {
  const Corpus& c = corpus();
  ClutterSpec spec;
  spec.grid_size = 4;
  spec.seed = 1234;
  EXPECT_EQ(synthesize(c.registry, c.cache, spec), synthesize(c.registry, c.cache, spec));
  spec.seed = 1235;
  const AnnotatedSample other = synthesize(c.registry, c.cache, spec);
  spec.seed = 1234;
  EXPECT_NE(other.image, synthesize(c.registry, c.cache, spec).image);
}

TEST(SynthesizeTest, LabelsTraceToTopSurvivorAndMeetThreshold) {
  const Corpus& c = corpus();
  for (int grid : {3, 4, 5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ClutterSpec spec;
      spec.grid_size = grid;
      spec.seed = seed;
      spec.jitter = seed % 2 == 1;
      const SynthesisResult r = synthesize_scene(c.registry, c.cache, spec);
      const auto& sv = r.survivors;
      const CoverOracle oracle(sv);
      const RgbImage& img = r.sample.image;
      std::vector<std::size_t> visible(sv.size(), 0);
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const int o = oracle.top_owner(x, y);
          const ClassId label = r.sample.labels.at(x, y);
          if (o < 0) {
            EXPECT_EQ(label, 0);
            continue;
          }
          const Placement& p = sv[static_cast<std::size_t>(o)];
          ++visible[static_cast<std::size_t>(o)];
          ASSERT_EQ(label, p.class_id);
          const Point off = p.offset();
          for (int ch = 0; ch < 3; ++ch) {
            ASSERT_EQ(img.at(x, y, ch), p.cutout->sample->image.at(x - off.x, y - off.y, ch));
          }
        }
      }
      for (std::size_t i = 0; i < sv.size(); ++i) {
        EXPECT_GE(static_cast<double>(visible[i]) / sv[i].total_pixels,
                  spec.visibility_threshold);
      }
      EXPECT_EQ(find_sample_defect(r.sample), std::nullopt);
      EXPECT_EQ(r.sample.source, Provenance::kSynthesized);
      EXPECT_EQ(r.sample.seed, seed);
    }
  }
}

TEST(SynthesizeTest, MeanObjectCountGrowsWithGrid) {
  const Corpus& c = corpus();
  double previous = 0.0;
  for (int grid : {3, 4, 5}) {
    double objects = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      ClutterSpec spec;
      spec.grid_size = grid;
      spec.seed = seed;
      objects += static_cast<double>(synthesize(c.registry, c.cache, spec).boxes.size());
    }
    const double mean = objects / 1000.0;
    EXPECT_GE(mean, previous) << "grid " << grid;
    previous = mean;
  }
}

TEST(SynthesizeTest, BasePolicies) {
  const Corpus& c = corpus();
  ClutterSpec spec;
  spec.grid_size = 2;
  spec.base_policy = BasePolicy::kBackgroundPool;
  const SynthesisResult pooled = synthesize_scene(c.registry, c.cache, spec);
  ASSERT_TRUE(pooled.plan.base_sample_id.has_value());
  EXPECT_EQ(pooled.plan.base_sample_id->rfind("bg-", 0), 0u);
  spec.base_policy = BasePolicy::kBlank;
  spec.blank_width = 40;
  spec.blank_height = 30;
  spec.blank_color = Rgb{9, 8, 7};
  const SynthesisResult blank = synthesize_scene(c.registry, c.cache, spec);
  EXPECT_EQ(blank.sample.image.width(), 40);
  EXPECT_EQ(blank.sample.image.height(), 30);
  EXPECT_FALSE(blank.plan.base_sample_id.has_value());
}

TEST(SynthesizeTest, EmptyRegistryIsRejected) {
  EXPECT_THROW(synthesize(ClassRegistry{}, corpus().cache, ClutterSpec{}), ValidationError);
  ClutterSpec bad;
  bad.visibility_threshold = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_EQ(ClutterSpec::from_json(ClutterSpec{}.to_json()).grid_size, 3);
}

}  // namespace
}  // namespace clutterlab
