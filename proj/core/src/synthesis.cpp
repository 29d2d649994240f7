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

#include "clutterlab/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <utility>

#include <nlohmann/json.hpp>

namespace clutterlab {

using nlohmann::json;

std::string_view to_string(BasePolicy policy) {
  switch (policy) {
    case BasePolicy::kDatasetImage:
      return "dataset_image";
    case BasePolicy::kBackgroundPool:
      return "background_pool";
    case BasePolicy::kBlank:
      return "blank";
  }
  return "dataset_image";
}

BasePolicy base_policy_from_string(std::string_view s) {
  if (s == "dataset_image") return BasePolicy::kDatasetImage;
  if (s == "background_pool") return BasePolicy::kBackgroundPool;
  if (s == "blank") return BasePolicy::kBlank;
  throw ValidationError("unknown base policy '" + std::string(s) + "'");
}

void ClutterSpec::validate() const {
  if (grid_size < 1) {
    throw ValidationError("grid size must be >= 1, got " +
                          std::to_string(grid_size));
  }
  if (!(visibility_threshold > 0.0 && visibility_threshold <= 1.0)) {
    throw ValidationError("visibility threshold must lie in (0, 1], got " +
                          std::to_string(visibility_threshold));
  }
  if (base_policy == BasePolicy::kBlank &&
      (blank_width < 1 || blank_height < 1)) {
    throw ValidationError("blank canvas must have positive dimensions");
  }
}

std::string ClutterSpec::to_json() const {
  json j = {{"grid_size", grid_size},
            {"visibility_threshold", visibility_threshold},
            {"base_policy", clutterlab::to_string(base_policy)},
            {"jitter", jitter},
            {"seed", seed},
            {"blank_width", blank_width},
            {"blank_height", blank_height},
            {"blank_color", {blank_color.r, blank_color.g, blank_color.b}}};
  return j.dump();
}

ClutterSpec ClutterSpec::from_json(std::string_view text) {
  ClutterSpec spec;
  try {
    const json j = json::parse(text);
    spec.grid_size = j.value("grid_size", spec.grid_size);
    spec.visibility_threshold =
        j.value("visibility_threshold", spec.visibility_threshold);
    spec.base_policy = base_policy_from_string(
        j.value("base_policy", std::string(to_string(spec.base_policy))));
    spec.jitter = j.value("jitter", spec.jitter);
    spec.seed = j.value("seed", spec.seed);
    spec.blank_width = j.value("blank_width", spec.blank_width);
    spec.blank_height = j.value("blank_height", spec.blank_height);
    if (j.contains("blank_color")) {
      auto c = j.at("blank_color").get<std::vector<int>>();
      if (c.size() != 3) throw ValidationError("blank_color needs 3 channels");
      spec.blank_color = Rgb{static_cast<std::uint8_t>(c[0]),
                             static_cast<std::uint8_t>(c[1]),
                             static_cast<std::uint8_t>(c[2])};
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed clutter spec: ") + ex.what());
  }
  spec.validate();
  return spec;
}

std::vector<Point> grid_centers(int width, int height, int grid_size) {
  if (grid_size < 1) {
    throw ValidationError("grid size must be >= 1");
  }
  if (grid_size > std::min(width, height)) {
    throw DegenerateGridError(grid_size, width, height);
  }
  // round((i + 0.5) * size / M) == floor(((2i + 1) * size + M) / (2M))
  auto center = [grid_size](int i, int size) {
    const std::int64_t num =
        std::int64_t{2 * i + 1} * size + grid_size;
    return static_cast<int>(num / (2 * std::int64_t{grid_size}));
  };
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(grid_size) * grid_size);
  for (int j = 0; j < grid_size; ++j) {
    for (int i = 0; i < grid_size; ++i) {
      out.push_back(Point{center(i, width), center(j, height)});
    }
  }
  return out;
}

ObjectCutout ObjectCutout::from_sample(SamplePtr sample, ClassId class_id) {
  ObjectCutout cut;
  cut.class_id = class_id;
  const LabelMap& labels = sample->labels;
  int x_min = labels.width(), y_min = labels.height(), x_max = -1, y_max = -1;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      if (labels.at(x, y) != class_id) continue;
      cut.pixels.push_back(Point{x, y});
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (cut.pixels.empty()) {
    throw ValidationError("sample '" + sample->id + "' has no pixels of class " +
                          std::to_string(class_id));
  }
  cut.extent = Box{x_min, y_min, x_max + 1, y_max + 1};
  cut.sample = std::move(sample);
  return cut;
}

Point Placement::offset() const {
  const Box& e = cutout->extent;
  return Point{anchor.x - (e.x_min + e.x_max) / 2,
               anchor.y - (e.y_min + e.y_max) / 2};
}

void Placement::attach(std::shared_ptr<const ObjectCutout> shape) {
  cutout = std::move(shape);
  total_pixels = cutout->pixels.size();
  visible_pixels = 0;
}

namespace {

const std::string& pick(const std::vector<std::string>& ids, Rng& rng) {
  return ids[rng.uniform_index(ids.size())];
}

}  // namespace

ScenePlan plan_scene(const ClassRegistry& registry, const SampleSource& source,
                     const ClutterSpec& spec, Rng& rng) {
  spec.validate();
  if (registry.empty()) throw ValidationError("class registry is empty");
  const SampleIndex& index = source.index();

  ScenePlan plan;
  plan.grid_size = spec.grid_size;
  switch (spec.base_policy) {
    case BasePolicy::kDatasetImage: {
      if (index.single_instance.empty()) {
        throw ValidationError("no dataset images available as a base");
      }
      const std::string& id = pick(index.single_instance, rng);
      SamplePtr base = source.fetch(id);
      plan.base_sample_id = id;
      plan.width = base->image.width();
      plan.height = base->image.height();
      const std::vector<ClassId> ids = present_ids(base->labels);
      if (!ids.empty()) {
        Placement p;
        p.class_id = ids.front();
        p.source_sample_id = id;
        p.cell_index = kBaseCellIndex;
        p.z_order = kBaseZOrder;
        plan.placements.push_back(std::move(p));
      }
      break;
    }
    case BasePolicy::kBackgroundPool: {
      if (index.backgrounds.empty()) {
        throw ValidationError("background pool is empty");
      }
      const std::string& id = pick(index.backgrounds, rng);
      SamplePtr base = source.fetch(id);
      plan.base_sample_id = id;
      plan.width = base->image.width();
      plan.height = base->image.height();
      break;
    }
    case BasePolicy::kBlank:
      plan.width = spec.blank_width;
      plan.height = spec.blank_height;
      break;
  }

  const std::vector<Point> anchors =
      grid_centers(plan.width, plan.height, spec.grid_size);
  const auto& classes = registry.entries();
  const int cell_w = plan.width / spec.grid_size;
  const int cell_h = plan.height / spec.grid_size;
  for (std::size_t cell = 0; cell < anchors.size(); ++cell) {
    const ClassEntry* chosen = nullptr;
    for (std::size_t attempt = 0; attempt < classes.size(); ++attempt) {
      const ClassEntry& candidate = classes[rng.uniform_index(classes.size())];
      if (index.image_count(candidate.id) > 0) {
        chosen = &candidate;
        break;
      }
    }
    if (chosen == nullptr) {
      throw ValidationError("no class with images found after " +
                            std::to_string(classes.size()) + " draws");
    }
    Placement p;
    p.class_id = chosen->id;
    p.source_sample_id = pick(index.by_class.at(chosen->id), rng);
    p.cell_index = static_cast<int>(cell);
    p.anchor = anchors[cell];
    if (spec.jitter) {
      const int jx = cell_w / 4;
      const int jy = cell_h / 4;
      p.anchor.x += static_cast<int>(rng.uniform_index(2 * jx + 1)) - jx;
      p.anchor.y += static_cast<int>(rng.uniform_index(2 * jy + 1)) - jy;
      p.anchor.x = std::clamp(p.anchor.x, 0, plan.width - 1);
      p.anchor.y = std::clamp(p.anchor.y, 0, plan.height - 1);
    }
    p.z_order = static_cast<int>(cell);
    plan.placements.push_back(std::move(p));
  }
  return plan;
}

std::vector<std::int32_t> z_buffer(const std::vector<Placement>& placements,
                                   int width, int height) {
  std::vector<std::size_t> order(placements.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return placements[a].z_order < placements[b].z_order;
  });
  std::vector<std::int32_t> top(static_cast<std::size_t>(width) * height, -1);
  for (std::size_t i : order) {
    const Placement& p = placements[i];
    const Point off = p.offset();
    for (const Point& src : p.cutout->pixels) {
      const int x = src.x + off.x;
      const int y = src.y + off.y;
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      top[static_cast<std::size_t>(y) * width + x] = static_cast<std::int32_t>(i);
    }
  }
  return top;
}

std::vector<Placement> simulate_visibility(std::vector<Placement> placements,
                                           int width, int height,
                                           double threshold) {
  std::stable_sort(placements.begin(), placements.end(),
                   [](const Placement& a, const Placement& b) {
                     return a.z_order < b.z_order;
                   });
  // Each pass either removes something or terminates, so at most
  // |placements| + 1 passes run.
  while (true) {
    const std::vector<std::int32_t> top = z_buffer(placements, width, height);
    std::vector<std::size_t> visible(placements.size(), 0);
    for (std::int32_t owner : top) {
      if (owner >= 0) ++visible[static_cast<std::size_t>(owner)];
    }
    std::vector<Placement> kept;
    kept.reserve(placements.size());
    for (std::size_t i = 0; i < placements.size(); ++i) {
      Placement& p = placements[i];
      p.visible_pixels = visible[i];
      const bool keep =
          p.total_pixels > 0 &&
          static_cast<double>(p.visible_pixels) /
                  static_cast<double>(p.total_pixels) >=
              threshold;
      if (keep) kept.push_back(std::move(p));
    }
    if (kept.size() == placements.size()) return kept;
    placements = std::move(kept);
  }
}

RenderedScene render_scene(const RgbImage& base,
                           const std::vector<Placement>& survivors) {
  RenderedScene out{base, LabelMap(base.width(), base.height()), {}};
  const int width = base.width();
  const int height = base.height();
  std::vector<std::size_t> order(survivors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return survivors[a].z_order < survivors[b].z_order;
  });

  std::vector<std::int32_t> owner(static_cast<std::size_t>(width) * height, -1);
  for (std::size_t i : order) {
    const Placement& p = survivors[i];
    if (!p.cutout || !p.cutout->sample) {
      throw ValidationError("placement from '" + p.source_sample_id +
                            "' has no source pixels");
    }
    const RgbImage& src = p.cutout->sample->image;
    const Point off = p.offset();
    for (const Point& s : p.cutout->pixels) {
      const int x = s.x + off.x;
      const int y = s.y + off.y;
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      auto from = src.pixel(s.x, s.y);
      auto to = out.image.pixel(x, y);
      to[0] = from[0];
      to[1] = from[1];
      to[2] = from[2];
      out.labels.at(x, y) = p.class_id;
      owner[static_cast<std::size_t>(y) * width + x] = static_cast<std::int32_t>(i);
    }
  }

  std::vector<Box> extent(survivors.size(),
                          Box{width, height, -1, -1});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::int32_t o = owner[static_cast<std::size_t>(y) * width + x];
      if (o < 0) continue;
      Box& b = extent[static_cast<std::size_t>(o)];
      b.x_min = std::min(b.x_min, x);
      b.y_min = std::min(b.y_min, y);
      b.x_max = std::max(b.x_max, x + 1);
      b.y_max = std::max(b.y_max, y + 1);
    }
  }
  for (std::size_t i : order) {
    if (extent[i].x_max < 0) continue;
    out.boxes.push_back(BoxRecord{survivors[i].class_id, extent[i]});
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Fetches each id at most once per scene.
class MemoSource final : public SampleSource {
 public:
  explicit MemoSource(const SampleSource& inner) : inner_(inner) {}

  SamplePtr fetch(const std::string& id) const override {
    auto it = memo_.find(id);
    if (it != memo_.end()) return it->second;
    return memo_.emplace(id, inner_.fetch(id)).first->second;
  }

  const SampleIndex& index() const override { return inner_.index(); }

 private:
  const SampleSource& inner_;
  mutable std::map<std::string, SamplePtr> memo_;
};

}  // namespace

SynthesisResult synthesize_scene(const ClassRegistry& registry,
                                 const SampleSource& source,
                                 const ClutterSpec& spec) {
  const auto t_start = Clock::now();
  SynthesisResult result;
  Rng rng(spec.seed);

  // Fetch everything the scene needs once; on a disk-backed source this is
  // where decoding happens.
  auto t = Clock::now();
  MemoSource fetched(source);
  result.plan = plan_scene(registry, fetched, spec, rng);
  SamplePtr base;
  if (result.plan.base_sample_id) {
    base = fetched.fetch(*result.plan.base_sample_id);
  }
  for (const Placement& p : result.plan.placements) {
    fetched.fetch(p.source_sample_id);
  }
  result.timings.decode_ms = ms_since(t);

  t = Clock::now();
  std::map<std::pair<std::string, ClassId>,
           std::shared_ptr<const ObjectCutout>>
      cutouts;
  std::vector<Placement> placements = result.plan.placements;
  for (Placement& p : placements) {
    auto key = std::make_pair(p.source_sample_id, p.class_id);
    auto it = cutouts.find(key);
    if (it == cutouts.end()) {
      it = cutouts
               .emplace(key, std::make_shared<const ObjectCutout>(
                                 ObjectCutout::from_sample(
                                     fetched.fetch(p.source_sample_id),
                                     p.class_id)))
               .first;
    }
    p.attach(it->second);
    if (p.cell_index == kBaseCellIndex) {
      const Box& e = p.cutout->extent;
      p.anchor = Point{(e.x_min + e.x_max) / 2, (e.y_min + e.y_max) / 2};
    }
  }
  for (std::size_t i = 0; i < placements.size(); ++i) {
    result.plan.placements[i] = placements[i];
  }
  const double prepare_ms = ms_since(t);

  t = Clock::now();
  result.survivors = simulate_visibility(std::move(placements),
                                         result.plan.width,
                                         result.plan.height,
                                         spec.visibility_threshold);
  result.timings.visibility_ms = ms_since(t);

  t = Clock::now();
  RgbImage canvas = base ? base->image
                         : RgbImage(result.plan.width, result.plan.height);
  if (!base) {
    auto px = canvas.data();
    for (std::size_t i = 0; i < px.size(); i += 3) {
      px[i] = spec.blank_color.r;
      px[i + 1] = spec.blank_color.g;
      px[i + 2] = spec.blank_color.b;
    }
  }
  RenderedScene scene = render_scene(canvas, result.survivors);
  result.timings.transfer_ms = prepare_ms + ms_since(t);

  result.sample.image = std::move(scene.image);
  result.sample.labels = std::move(scene.labels);
  result.sample.boxes = std::move(scene.boxes);
  result.sample.source = Provenance::kSynthesized;
  result.sample.seed = spec.seed;
  result.timings.total_ms = ms_since(t_start);
  return result;
}

AnnotatedSample synthesize(const ClassRegistry& registry,
                           const SampleSource& source,
                           const ClutterSpec& spec) {
  return synthesize_scene(registry, source, spec).sample;
}

}  // namespace clutterlab
