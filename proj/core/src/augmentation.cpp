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

#include "clutterlab/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace clutterlab {

using nlohmann::json;

void AugmentSpec::validate() const {
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(std::string(name) + " must lie in [0, 1]");
    }
  };
  check_prob(color_jitter_prob, "color_jitter_prob");
  check_prob(blur_prob, "blur_prob");
  check_prob(mirror_prob, "mirror_prob");
  if (rotation_range < 0.0 || rotation_range > 45.0) {
    throw ValidationError("rotation_range must lie in [0, 45] degrees");
  }
  if (blur_sigma < 0.0) throw ValidationError("blur_sigma must be >= 0");
  if (!(scale_range.first > 0.0 && scale_range.first <= scale_range.second)) {
    throw ValidationError("scale_range must satisfy 0 < lo <= hi");
  }
  if (crop && (crop->width < 1 || crop->height < 1)) {
    throw ValidationError("crop must have positive dimensions");
  }
}

std::string AugmentSpec::to_json() const {
  json j = {{"color_jitter_prob", color_jitter_prob},
            {"hue_range", hue_range},
            {"saturation_range", saturation_range},
            {"brightness_range", brightness_range},
            {"contrast_range", contrast_range},
            {"rotation_range", rotation_range},
            {"blur_prob", blur_prob},
            {"blur_sigma", blur_sigma},
            {"mirror_prob", mirror_prob},
            {"scale_range", {scale_range.first, scale_range.second}},
            {"seed", seed}};
  j["crop"] = crop ? json{crop->width, crop->height} : json(nullptr);
  return j.dump();
}

AugmentSpec AugmentSpec::from_json(std::string_view text) {
  AugmentSpec s;
  try {
    const json j = json::parse(text);
    s.color_jitter_prob = j.value("color_jitter_prob", s.color_jitter_prob);
    s.hue_range = j.value("hue_range", s.hue_range);
    s.saturation_range = j.value("saturation_range", s.saturation_range);
    s.brightness_range = j.value("brightness_range", s.brightness_range);
    s.contrast_range = j.value("contrast_range", s.contrast_range);
    s.rotation_range = j.value("rotation_range", s.rotation_range);
    s.blur_prob = j.value("blur_prob", s.blur_prob);
    s.blur_sigma = j.value("blur_sigma", s.blur_sigma);
    s.mirror_prob = j.value("mirror_prob", s.mirror_prob);
    if (j.contains("scale_range")) {
      auto r = j.at("scale_range").get<std::vector<double>>();
      if (r.size() != 2) throw ValidationError("scale_range needs 2 values");
      s.scale_range = {r[0], r[1]};
    }
    if (j.contains("crop")) {
      if (j.at("crop").is_null()) {
        s.crop.reset();
      } else {
        auto c = j.at("crop").get<std::vector<int>>();
        if (c.size() != 2) throw ValidationError("crop needs 2 values");
        s.crop = Size{c[0], c[1]};
      }
    }
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed augment spec: ") + ex.what());
  }
  s.validate();
  return s;
}

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// --- photometric -----------------------------------------------------------

void rgb_to_hsv(double r, double g, double b, double& h, double& s,
                double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g,
                double& b) {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void shift_hsv(RgbImage& image, double hue_shift, double sat_scale) {
  auto px = image.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    double h, s, v;
    rgb_to_hsv(px[i], px[i + 1], px[i + 2], h, s, v);
    h = std::fmod(h + hue_shift + 1.0, 1.0);
    s = std::clamp(s * sat_scale, 0.0, 1.0);
    double r, g, b;
    hsv_to_rgb(h, s, v, r, g, b);
    px[i] = to_u8(r);
    px[i + 1] = to_u8(g);
    px[i + 2] = to_u8(b);
  }
}

void adjust_brightness(RgbImage& image, double delta) {
  for (std::uint8_t& v : image.data()) v = to_u8(v + delta);
}

void adjust_contrast(RgbImage& image, double factor) {
  auto px = image.data();
  double mean = 0.0;
  for (std::uint8_t v : px) mean += v;
  mean /= static_cast<double>(px.size());
  for (std::uint8_t& v : px) v = to_u8(mean + (v - mean) * factor);
}

// --- geometric ---------------------------------------------------------------

// Bilinear sample at continuous pixel-centre coordinates, neighbours clamped.
void sample_bilinear(const RgbImage& src, double fx, double fy,
                     std::span<std::uint8_t, 3> out) {
  fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, src.width() - 1);
  const int y1 = std::min(y0 + 1, src.height() - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double top = src.at(x0, y0, c) * (1 - ax) + src.at(x1, y0, c) * ax;
    const double bot = src.at(x0, y1, c) * (1 - ax) + src.at(x1, y1, c) * ax;
    out[c] = to_u8(top * (1 - ay) + bot * ay);
  }
}

LabelMap mirror_labels(const LabelMap& labels) {
  LabelMap out(labels.width(), labels.height());
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      out.at(x, y) = labels.at(labels.width() - 1 - x, y);
    }
  }
  return out;
}

RgbImage mirror_image(const RgbImage& image) {
  RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto from = image.pixel(image.width() - 1 - x, y);
      std::copy(from.begin(), from.end(), out.pixel(x, y).begin());
    }
  }
  return out;
}

LabelMap rescale_labels(const LabelMap& labels, Size size) {
  LabelMap out(size.width, size.height);
  const double sx = static_cast<double>(labels.width()) / size.width;
  const double sy = static_cast<double>(labels.height()) / size.height;
  for (int y = 0; y < size.height; ++y) {
    const int src_y = std::min(static_cast<int>((y + 0.5) * sy),
                               labels.height() - 1);
    for (int x = 0; x < size.width; ++x) {
      const int src_x = std::min(static_cast<int>((x + 0.5) * sx),
                                 labels.width() - 1);
      out.at(x, y) = labels.at(src_x, src_y);
    }
  }
  return out;
}

RgbImage rescale_image(const RgbImage& image, Size size) {
  RgbImage out(size.width, size.height);
  const double sx = static_cast<double>(image.width()) / size.width;
  const double sy = static_cast<double>(image.height()) / size.height;
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      sample_bilinear(image, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5,
                      out.pixel(x, y));
    }
  }
  return out;
}

struct Rotation {
  double cos_t;
  double sin_t;
  double cx;
  double cy;

  Rotation(double degrees, int width, int height)
      : cos_t(std::cos(degrees * std::numbers::pi / 180.0)),
        sin_t(std::sin(degrees * std::numbers::pi / 180.0)),
        cx(width / 2.0),
        cy(height / 2.0) {}

  // Source position (continuous, pixel edges at integers) for the centre
  // of destination pixel (x, y).
  void source(int x, int y, double& sx, double& sy) const {
    const double dx = x + 0.5 - cx;
    const double dy = y + 0.5 - cy;
    sx = cos_t * dx + sin_t * dy + cx;
    sy = -sin_t * dx + cos_t * dy + cy;
  }
};

LabelMap rotate_labels(const LabelMap& labels, double degrees) {
  if (degrees == 0.0) return labels;
  const Rotation rot(degrees, labels.width(), labels.height());
  LabelMap out(labels.width(), labels.height());
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      double sx, sy;
      rot.source(x, y, sx, sy);
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (labels.in_bounds(ix, iy)) out.at(x, y) = labels.at(ix, iy);
    }
  }
  return out;
}

RgbImage rotate_image(const RgbImage& image, double degrees) {
  if (degrees == 0.0) return image;
  const Rotation rot(degrees, image.width(), image.height());
  RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sx, sy;
      rot.source(x, y, sx, sy);
      if (sx < 0.0 || sy < 0.0 || sx >= image.width() ||
          sy >= image.height()) {
        continue;
      }
      sample_bilinear(image, sx - 0.5, sy - 0.5, out.pixel(x, y));
    }
  }
  return out;
}

template <typename T, std::size_t C>
Raster<T, C> crop_raster(const Raster<T, C>& src, int x0, int y0, Size size) {
  Raster<T, C> out(size.width, size.height);
  for (int y = 0; y < size.height; ++y) {
    auto from = src.data().subspan(src.offset(x0, y0 + y),
                                   static_cast<std::size_t>(size.width) * C);
    std::copy(from.begin(), from.end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(out.offset(0, y)));
  }
  return out;
}

// Instance index per pixel (box index + 1); earlier boxes win contested
// pixels.
LabelMap instance_map(const AnnotatedSample& sample) {
  LabelMap out(sample.labels.width(), sample.labels.height());
  for (std::size_t i = sample.boxes.size(); i-- > 0;) {
    const BoxRecord& rec = sample.boxes[i];
    for (int y = rec.box.y_min; y < rec.box.y_max; ++y) {
      for (int x = rec.box.x_min; x < rec.box.x_max; ++x) {
        if (sample.labels.at(x, y) == rec.class_id) {
          out.at(x, y) = static_cast<std::uint16_t>(i + 1);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::pair<RgbImage, LabelMap> rotate(const RgbImage& image,
                                     const LabelMap& labels, double degrees) {
  if (std::abs(degrees) > 45.0) {
    throw ValidationError("rotation limited to +-45 degrees");
  }
  if (!image.same_dims(labels)) {
    throw ValidationError("image and labels differ in size");
  }
  return {rotate_image(image, degrees), rotate_labels(labels, degrees)};
}

std::pair<RgbImage, LabelMap> mirror(const RgbImage& image,
                                     const LabelMap& labels) {
  return {mirror_image(image), mirror_labels(labels)};
}

std::pair<RgbImage, LabelMap> rescale(const RgbImage& image,
                                      const LabelMap& labels, Size size) {
  return {rescale_image(image, size), rescale_labels(labels, size)};
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

std::vector<float> blur_plane(std::span<const float> plane, int width,
                              int height, double sigma) {
  std::vector<float> out(plane.begin(), plane.end());
  if (sigma <= 0.0) return out;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<float> tmp(plane.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int sx = std::clamp(x + i, 0, width - 1);
        acc += k[static_cast<std::size_t>(i + radius)] *
               plane[static_cast<std::size_t>(y) * width + sx];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int sy = std::clamp(y + i, 0, height - 1);
        acc += k[static_cast<std::size_t>(i + radius)] *
               tmp[static_cast<std::size_t>(sy) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = static_cast<float>(acc);
    }
  }
  return out;
}

RgbImage gaussian_blur(const RgbImage& image, double sigma) {
  if (sigma <= 0.0) return image;
  RgbImage out(image.width(), image.height());
  std::vector<float> plane(image.pixel_count());
  for (std::size_t c = 0; c < 3; ++c) {
    auto px = image.data();
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = px[i * 3 + c];
    const std::vector<float> blurred =
        blur_plane(plane, image.width(), image.height(), sigma);
    auto dst = out.data();
    for (std::size_t i = 0; i < plane.size(); ++i) {
      dst[i * 3 + c] = to_u8(blurred[i]);
    }
  }
  return out;
}

AnnotatedSample apply(const AnnotatedSample& sample, const AugmentSpec& spec,
                      Rng& rng) {
  spec.validate();
  validate_sample(sample);
  AnnotatedSample out = sample;
  LabelMap instances = instance_map(sample);
  bool moved = false;

  // colour
  double hue = 0.0, sat = 1.0;
  bool hsv = false;
  if (rng.bernoulli(spec.color_jitter_prob)) {
    hue = rng.uniform(-spec.hue_range, spec.hue_range);
    hsv = true;
  }
  if (rng.bernoulli(spec.color_jitter_prob)) {
    sat = 1.0 + rng.uniform(-spec.saturation_range, spec.saturation_range);
    hsv = true;
  }
  if (hsv) shift_hsv(out.image, hue, sat);
  if (rng.bernoulli(spec.color_jitter_prob)) {
    adjust_brightness(out.image, 255.0 * rng.uniform(-spec.brightness_range,
                                                     spec.brightness_range));
  }
  if (rng.bernoulli(spec.color_jitter_prob)) {
    adjust_contrast(out.image,
                    1.0 + rng.uniform(-spec.contrast_range, spec.contrast_range));
  }

  // mirror
  if (rng.bernoulli(spec.mirror_prob)) {
    out.image = mirror_image(out.image);
    out.labels = mirror_labels(out.labels);
    instances = mirror_labels(instances);
    moved = true;
  }

  // scale
  const auto [lo, hi] = spec.scale_range;
  const double scale = lo == hi ? lo : rng.uniform(lo, hi);
  if (scale != 1.0) {
    const Size size{
        std::max(1, static_cast<int>(std::lround(out.image.width() * scale))),
        std::max(1, static_cast<int>(std::lround(out.image.height() * scale)))};
    if (size.width != out.image.width() || size.height != out.image.height()) {
      out.image = rescale_image(out.image, size);
      out.labels = rescale_labels(out.labels, size);
      instances = rescale_labels(instances, size);
      moved = true;
    }
  }

  // rotate
  const double angle =
      spec.rotation_range > 0.0
          ? rng.uniform(-spec.rotation_range, spec.rotation_range)
          : 0.0;
  if (angle != 0.0) {
    out.image = rotate_image(out.image, angle);
    out.labels = rotate_labels(out.labels, angle);
    instances = rotate_labels(instances, angle);
    moved = true;
  }

  // blur
  if (rng.bernoulli(spec.blur_prob)) {
    out.image = gaussian_blur(out.image, spec.blur_sigma);
  }

  // crop
  if (spec.crop) {
    const Size c = *spec.crop;
    if (c.width > out.image.width() || c.height > out.image.height()) {
      throw ValidationError(
          "crop " + std::to_string(c.width) + "x" + std::to_string(c.height) +
          " exceeds image " + std::to_string(out.image.width()) + "x" +
          std::to_string(out.image.height()));
    }
    const int x0 = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(out.image.width() - c.width) + 1));
    const int y0 = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(out.image.height() - c.height) + 1));
    if (x0 != 0 || y0 != 0 || c.width != out.image.width() ||
        c.height != out.image.height()) {
      out.image = crop_raster(out.image, x0, y0, c);
      out.labels = crop_raster(out.labels, x0, y0, c);
      instances = crop_raster(instances, x0, y0, c);
      moved = true;
    }
  }

  if (moved) {
    std::vector<BoxRecord> boxes;
    for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
      if (auto b = tight_box(instances, static_cast<ClassId>(i + 1))) {
        boxes.push_back(BoxRecord{sample.boxes[i].class_id, *b});
      }
    }
    out.boxes = std::move(boxes);
  }
  return out;
}

}  // namespace clutterlab
