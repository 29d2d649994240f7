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
#include <filesystem>
#include <string>
#include <vector>

#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"

namespace clutterlab {

// Synthetic single-instance corpus: one textured ellipse or rectangle per
// image on a noisy chroma-key background. Object colours stay more than
// `kFixtureTolerance` away from both the background and black, so the
// chroma oracle and the black-background component boxes recover the stored
// ground truth exactly.
struct FixtureSpec {
  int classes = 10;
  int images_per_class = 20;
  int width = 256;
  int height = 256;
  int backgrounds = 0;  // extra label-free background images
  std::uint64_t seed = 1;
};

inline constexpr Rgb kFixtureBackground{0, 140, 0};
inline constexpr int kFixtureBackgroundNoise = 4;
inline constexpr int kFixtureTolerance = 16;

std::string fixture_class_name(int index);
std::string fixture_sample_id(int class_index, int image_index);

ClassRegistry fixture_registry(const FixtureSpec& spec);

// One image of class `class_index` (0-based, id = index + 1).
AnnotatedSample make_fixture_sample(const FixtureSpec& spec, int class_index,
                                    int image_index);

AnnotatedSample make_background_sample(const FixtureSpec& spec, int index);

std::vector<AnnotatedSample> make_fixture_samples(const FixtureSpec& spec);

// Writes the samples plus classes.json into `directory`.
void write_fixture_dataset(const FixtureSpec& spec,
                           const std::filesystem::path& directory);

}  // namespace clutterlab
