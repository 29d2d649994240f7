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
#include <span>
#include <vector>

#include "clutterlab/raster.hpp"

namespace clutterlab::png {

struct Header {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;  // libpng PNG_COLOR_TYPE_* value
};

// `origin` is only used to label errors.
Header read_header(std::span<const std::uint8_t> bytes,
                   const std::filesystem::path& origin);

RgbImage decode_rgb8(std::span<const std::uint8_t> bytes,
                     const std::filesystem::path& origin);
LabelMap decode_gray16(std::span<const std::uint8_t> bytes,
                       const std::filesystem::path& origin);

std::vector<std::uint8_t> encode_rgb8(const RgbImage& image);
std::vector<std::uint8_t> encode_gray16(const LabelMap& labels);

}  // namespace clutterlab::png
