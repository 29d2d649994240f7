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

#include "clutterlab/fixtures.hpp"

#include <algorithm>
#include <cstdio>

#include "clutterlab/rng.hpp"

namespace clutterlab {

std::string fixture_class_name(int index) {
  return "item_" + std::to_string(index + 1);
}

std::string fixture_sample_id(int class_index, int image_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%03d-%04d", class_index + 1, image_index);
  return buf;
}

ClassRegistry fixture_registry(const FixtureSpec& spec) {
  ClassRegistry registry;
  for (int c = 0; c < spec.classes; ++c) {
    registry.insert(static_cast<ClassId>(c + 1), fixture_class_name(c),
                    static_cast<std::size_t>(spec.images_per_class));
  }
  return registry;
}

namespace {

std::uint8_t clamp_u8(int v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

int noise(Rng& rng, int amplitude) {
  return static_cast<int>(rng.uniform_index(2 * amplitude + 1)) - amplitude;
}

RgbImage noisy_background(const FixtureSpec& spec, Rng& rng) {
  RgbImage image(spec.width, spec.height);
  auto px = image.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = clamp_u8(kFixtureBackground.r + noise(rng, kFixtureBackgroundNoise));
    px[i + 1] =
        clamp_u8(kFixtureBackground.g + noise(rng, kFixtureBackgroundNoise));
    px[i + 2] =
        clamp_u8(kFixtureBackground.b + noise(rng, kFixtureBackgroundNoise));
  }
  return image;
}

// Red stays in [120, 230] so every object differs from the background and
// from black by well over the oracle tolerance, texture included.
Rgb class_colour(int class_index) {
  return Rgb{static_cast<std::uint8_t>(120 + (class_index * 37) % 111),
             static_cast<std::uint8_t>((class_index * 23) % 61),
             static_cast<std::uint8_t>(40 + (class_index * 71) % 191)};
}

}  // namespace

AnnotatedSample make_fixture_sample(const FixtureSpec& spec, int class_index,
                                    int image_index) {
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(class_index),
                                  static_cast<std::uint64_t>(image_index)}));
  AnnotatedSample s;
  s.id = fixture_sample_id(class_index, image_index);
  s.source = Provenance::kFixture;
  s.image = noisy_background(spec, rng);
  s.labels = LabelMap(spec.width, spec.height);

  const ClassId id = static_cast<ClassId>(class_index + 1);
  const int min_dim = std::min(spec.width, spec.height);
  const int lo = std::max(2, min_dim / 10);
  const int hi = std::max(lo, min_dim / 5);
  const int half_w = lo + static_cast<int>(rng.uniform_index(hi - lo + 1));
  const int half_h = lo + static_cast<int>(rng.uniform_index(hi - lo + 1));
  const int cx = half_w + static_cast<int>(rng.uniform_index(
                              std::max(1, spec.width - 2 * half_w)));
  const int cy = half_h + static_cast<int>(rng.uniform_index(
                              std::max(1, spec.height - 2 * half_h)));
  const bool ellipse = rng.bernoulli(0.5);
  const Rgb colour = class_colour(class_index);

  for (int y = std::max(0, cy - half_h); y < std::min(spec.height, cy + half_h); ++y) {
    for (int x = std::max(0, cx - half_w); x < std::min(spec.width, cx + half_w); ++x) {
      if (ellipse) {
        const double dx = (x + 0.5 - cx) / half_w;
        const double dy = (y + 0.5 - cy) / half_h;
        if (dx * dx + dy * dy > 1.0) continue;
      }
      auto p = s.image.pixel(x, y);
      p[0] = clamp_u8(colour.r + noise(rng, 20));
      p[1] = clamp_u8(colour.g + noise(rng, 20));
      p[2] = clamp_u8(colour.b + noise(rng, 20));
      s.labels.at(x, y) = id;
    }
  }
  if (auto box = tight_box(s.labels, id)) s.boxes.push_back(BoxRecord{id, *box});
  return s;
}

AnnotatedSample make_background_sample(const FixtureSpec& spec, int index) {
  Rng rng(derive_seed(spec.seed, {0xbacc0000ULL + static_cast<std::uint64_t>(index)}));
  AnnotatedSample s;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "bg-%04d", index);
  s.id = buf;
  s.source = Provenance::kFixture;
  s.image = noisy_background(spec, rng);
  s.labels = LabelMap(spec.width, spec.height);
  return s;
}

std::vector<AnnotatedSample> make_fixture_samples(const FixtureSpec& spec) {
  std::vector<AnnotatedSample> out;
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.images_per_class; ++i) {
      out.push_back(make_fixture_sample(spec, c, i));
    }
  }
  for (int b = 0; b < spec.backgrounds; ++b) {
    out.push_back(make_background_sample(spec, b));
  }
  return out;
}

void write_fixture_dataset(const FixtureSpec& spec,
                           const std::filesystem::path& directory) {
  DatasetWriter writer(directory);
  for (const AnnotatedSample& s : make_fixture_samples(spec)) writer.save(s);
  fixture_registry(spec).save(directory / kClassesFile);
}

}  // namespace clutterlab
