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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   clutterlab_acceptance                 run every criterion
//   clutterlab_acceptance --criterion 4   run one
//
// Exit status is 0 when every selected criterion passes, 1 otherwise, and
// 77 when the only selected criterion needs hardware this host lacks.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "clutterlab/evaluation.hpp"
#include "clutterlab/fixtures.hpp"
#include "clutterlab/fusion.hpp"
#include "clutterlab/head_graph.hpp"
#include "clutterlab/instance_detection.hpp"
#include "clutterlab/pipeline.hpp"
#include "clutterlab/predictors.hpp"
#include "clutterlab/sample_cache.hpp"
#include "clutterlab/synthesis.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace clutterlab;

namespace {

constexpr int kSkipped = 77;

struct Outcome {
  bool pass = false;
  std::string detail;
  bool unattainable = false;  // host lacks what the criterion presumes
};

struct Criterion {
  int number;
  std::string title;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

std::string cli_path;

// ---------------------------------------------------------------------------
// 1. fusion rules against a pixel-set oracle

struct OracleFusion {
  std::optional<std::string> error;  // "empty_mask" or "disjoint"
  Box box;
  BinaryMask mask;
};

OracleFusion oracle_fuse(const BinaryMask& mask, const Box& box, FusionRule rule) {
  OracleFusion out;
  const int w = mask.width(), h = mask.height();
  int mx0 = w, my0 = h, mx1 = -1, my1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      mx0 = std::min(mx0, x);
      my0 = std::min(my0, y);
      mx1 = std::max(mx1, x);
      my1 = std::max(my1, y);
    }
  }
  const bool mask_empty = mx1 < 0;
  auto in_mask_box = [&](int x, int y) {
    return !mask_empty && x >= mx0 && x <= mx1 && y >= my0 && y <= my1;
  };
  auto in_box = [&](int x, int y) { return box.contains(x, y); };
  std::function<bool(int, int)> in_region;
  switch (rule) {
    case FusionRule::kBoxOnly:
      in_region = in_box;
      break;
    case FusionRule::kIntersection:
      if (mask_empty) {
        out.error = "empty_mask";
        return out;
      }
      in_region = [&](int x, int y) { return in_mask_box(x, y) && in_box(x, y); };
      break;
    case FusionRule::kMaskOnly:
      if (mask_empty) {
        out.error = "empty_mask";
        return out;
      }
      in_region = in_mask_box;
      break;
  }
  int rx0 = w, ry0 = h, rx1 = -1, ry1 = -1;
  std::size_t kept = 0;
  out.mask = BinaryMask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in_region(x, y)) continue;
      rx0 = std::min(rx0, x);
      ry0 = std::min(ry0, y);
      rx1 = std::max(rx1, x);
      ry1 = std::max(ry1, y);
      if (mask.at(x, y)) {
        out.mask.at(x, y) = 1;
        ++kept;
      }
    }
  }
  if (rx1 < 0) {
    out.error = "disjoint";
    return out;
  }
  out.box = Box{rx0, ry0, rx1 + 1, ry1 + 1};
  if (kept == 0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (in_region(x, y)) out.mask.at(x, y) = 1;
      }
    }
  }
  return out;
}

Outcome fusion_suite() {
  Rng rng(101);
  std::map<FusionRule, std::size_t> cases, agree;
  for (int trial = 0; trial < 10000; ++trial) {
    const int w = 4 + static_cast<int>(rng.uniform_index(21));
    const int h = 4 + static_cast<int>(rng.uniform_index(21));
    BinaryMask mask = rng.bernoulli(0.05) ? BinaryMask(w, h)
                                          : testing::random_mask(rng, w, h, rng.uniform(0.0, 0.3));
    if (rng.bernoulli(0.5)) {
      // A compact blob, so intersections are frequently non-trivial.
      mask = BinaryMask(w, h);
      testing::fill_rect(mask, testing::random_box(rng, w, h));
    }
    const Box box = testing::random_box(rng, w, h);
    const int a = static_cast<int>(rng.uniform_index(5));
    const int b = static_cast<int>(rng.uniform_index(5));
    // One policy per ordering each trial.
    for (FusionPolicy policy : {FusionPolicy{std::min(a, b), std::min(a, b) + 1},
                                FusionPolicy{a, a},
                                FusionPolicy{std::max(a, b) + 1, std::max(a, b)}}) {
      const FusionRule rule = select_rule(policy);
      ++cases[rule];
      const OracleFusion want = oracle_fuse(mask, box, rule);
      std::optional<std::string> got_error;
      FusedAnnotation got;
      try {
        got = fuse(mask, box, policy);
      } catch (const EmptyMaskError&) {
        got_error = "empty_mask";
      } catch (const EmptyFusionError&) {
        got_error = "disjoint";
      }
      bool ok = got_error == want.error;
      if (ok && !want.error) {
        ok = got.rule_applied == rule && got.final_box == want.box &&
             got.final_mask == want.mask;
      }
      if (ok) ++agree[rule];
    }
  }
  const FusionRule rules[] = {FusionRule::kBoxOnly, FusionRule::kIntersection,
                              FusionRule::kMaskOnly};
  bool pass = true;
  std::ostringstream d;
  for (FusionRule r : rules) {
    pass = pass && cases[r] > 0 && agree[r] == cases[r];
    d << to_string(r) << ' ' << agree[r] << '/' << cases[r] << ' ';
  }
  return {pass, d.str() + "agree with the oracle"};
}

// ---------------------------------------------------------------------------
// 2. label trace and visibility over seeded scenes

struct Corpus {
  FixtureSpec spec;
  SampleCache cache;
  ClassRegistry registry;

  explicit Corpus(FixtureSpec s)
      : spec(s), cache(make_fixture_samples(s)), registry(fixture_registry(s)) {}
};

// Painter's algorithm over the survivors' own pixel lists.
std::vector<int> paint_owners(const std::vector<Placement>& survivors, int w, int h) {
  std::vector<std::size_t> order(survivors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return survivors[a].z_order < survivors[b].z_order;
  });
  std::vector<int> owner(static_cast<std::size_t>(w) * h, -1);
  for (std::size_t i : order) {
    const Point off = survivors[i].offset();
    for (const Point& p : survivors[i].cutout->pixels) {
      const int x = p.x + off.x, y = p.y + off.y;
      if (x < 0 || y < 0 || x >= w || y >= h) continue;
      owner[static_cast<std::size_t>(y) * w + x] = static_cast<int>(i);
    }
  }
  return owner;
}

Outcome clutter_consistency() {
  FixtureSpec fs;
  fs.classes = 10;
  fs.images_per_class = 20;
  const Corpus c(fs);
  std::size_t scenes = 0, violations = 0, objects = 0;
  for (int grid : {3, 4, 5}) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      ClutterSpec spec;
      spec.grid_size = grid;
      spec.seed = derive_seed(7, {static_cast<std::uint64_t>(grid), seed});
      const SynthesisResult r = synthesize_scene(c.registry, c.cache, spec);
      const int w = r.sample.image.width(), h = r.sample.image.height();
      const auto owner = paint_owners(r.survivors, w, h);
      std::vector<std::size_t> visible(r.survivors.size(), 0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int o = owner[static_cast<std::size_t>(y) * w + x];
          const ClassId label = r.sample.labels.at(x, y);
          if (o < 0) {
            violations += label != 0;
            continue;
          }
          ++visible[static_cast<std::size_t>(o)];
          violations += label != r.survivors[static_cast<std::size_t>(o)].class_id;
        }
      }
      for (std::size_t i = 0; i < r.survivors.size(); ++i) {
        const Placement& p = r.survivors[i];
        const double frac = static_cast<double>(visible[i]) / p.total_pixels;
        violations += frac < spec.visibility_threshold;
        violations += visible[i] != p.visible_pixels;
      }
      objects += r.survivors.size();
      ++scenes;
    }
  }
  return {violations == 0,
          fmt("%zu scenes, %zu placed objects, %zu violations", scenes, objects, violations)};
}

// ---------------------------------------------------------------------------
// 3. bench structure on a 200-image corpus

Outcome bench_structure() {
  testing::TempDir dir("acceptance-bench");
  FixtureSpec fs;
  fs.classes = 10;
  fs.images_per_class = 20;
  write_fixture_dataset(fs, dir.path());
  const Manifest manifest = Manifest::load(dir.path());
  const BenchReport r = bench_clutter(manifest, {3, 4, 5}, 20,
                                      {BenchMode::kDisk, BenchMode::kRam},
                                      ClutterSpec{}, 3);
  bool pass = r.corpus_images == 200;
  std::ostringstream d;
  d.setf(std::ios::fixed);
  d.precision(2);
  for (BenchMode mode : {BenchMode::kDisk, BenchMode::kRam}) {
    const double t3 = r.row(mode, 3).total_ms;
    const double t4 = r.row(mode, 4).total_ms;
    const double t5 = r.row(mode, 5).total_ms;
    pass = pass && t3 < t4 && t4 < t5;
    d << to_string(mode) << ' ' << t3 << '/' << t4 << '/' << t5 << " ms; ";
  }
  d << "ram/disk";
  for (int g : {3, 4, 5}) {
    const double ratio = r.row(BenchMode::kRam, g).total_ms / r.row(BenchMode::kDisk, g).total_ms;
    pass = pass && ratio <= 0.67;
    d << ' ' << ratio;
  }
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// 4. feed sampling ratio

Outcome sampling_ratio() {
  const PipelineConfig config;
  FeedSelector selector(derive_seed(config.seed, {4}), config.single_probability());
  const int n = 100000;
  int multi = 0;
  for (int i = 0; i < n; ++i) multi += selector.next_is_single() ? 0 : 1;
  const double frac = static_cast<double>(multi) / n;
  return {frac >= 0.73 && frac <= 0.77, fmt("multi-class fraction %.4f over %d decisions", frac, n)};
}

// ---------------------------------------------------------------------------
// 5. consume-once over 10,000 scenes

Outcome consume_once() {
  const ChromaOracleMaskPredictor mask(kFixtureBackground, kFixtureTolerance);
  const ComponentBoxPredictor box(kFixtureBackground, kFixtureTolerance);
  RecordingChild child;
  PipelineConfig config;
  config.seed = 5;
  config.max_scenes = 10000;
  config.images_per_revolution = 20;
  Pipeline p(config, fixture_items(10, 20, 5), mask, box, child);
  const PipelineReport r = p.run();
  const auto ids = child.synthesized_ids();
  const std::size_t unique = std::set<std::string>(ids.begin(), ids.end()).size();
  const std::size_t dups = ids.size() - unique + r.metrics.child.duplicate_synthesized;
  const bool pass = dups == 0 && r.metrics.flow.scenes_delivered == 10000 &&
                    ids.size() == 10000 && r.metrics.child.defects == 0;
  return {pass, fmt("%zu scenes delivered, %zu duplicates, %zu singles", ids.size(), dups,
                    r.metrics.flow.singles_delivered)};
}

// ---------------------------------------------------------------------------
// 6. incremental registration

Outcome incremental_registration() {
  const ChromaOracleMaskPredictor mask(kFixtureBackground, kFixtureTolerance);
  const ComponentBoxPredictor box(kFixtureBackground, kFixtureTolerance);
  RecordingChild child;
  PipelineConfig config;
  config.seed = 6;
  // Safety cap only; the run stops once the late item has shown up and a
  // margin of later scenes has been drawn.
  config.max_scenes = 50000;
  config.hold_acquisition_open = true;
  Pipeline p(config, fixture_items(10, 10, 6), mask, box, child);

  FixtureSpec late;
  late.classes = 11;
  late.seed = 6;
  std::atomic<ClassId> added{0};
  std::atomic<std::size_t> seen{0};
  std::atomic<std::size_t> since_first{0};
  p.on_scene([&](const SceneRecord& rec) {
    const std::size_t n = ++seen;
    if (n == 300) {
      AcquisitionItem item;
      item.name = "late_item";
      for (int i = 0; i < 10; ++i) {
        item.images.push_back([late, i] { return make_fixture_sample(late, 10, i).image; });
      }
      added = p.add_item(std::move(item));
      return;
    }
    const ClassId id = added.load();
    if (id == 0) return;
    const bool has = std::find(rec.classes.begin(), rec.classes.end(), id) != rec.classes.end();
    if ((since_first > 0 || has) && ++since_first > 200) p.request_stop();
  });
  const PipelineReport r = p.run();
  const ClassId id = added.load();
  if (id == 0 || r.first_ground_truth.count(id) == 0) {
    return {false, "late item never received a ground truth"};
  }
  const std::uint64_t gt = r.first_ground_truth.at(id);
  const std::size_t k = r.registry.size();
  std::size_t early = 0, after = 0;
  std::optional<std::size_t> first;
  for (const SceneRecord& s : r.scenes) {
    const bool has = std::find(s.classes.begin(), s.classes.end(), id) != s.classes.end();
    if (s.store_version < gt) {
      early += has;
      continue;
    }
    if (has && !first) first = after;
    ++after;
  }
  const bool pass = early == 0 && first && *first < 2 * k;
  return {pass, fmt("K=%zu, first appearance at scene %lld after ground truth, %zu early",
                    k, first ? static_cast<long long>(*first) : -1LL, early)};
}

// ---------------------------------------------------------------------------
// 7. instance detection

Outcome instance_detection() {
  Rng rng(7);
  const ComponentBoxPredictor predictor(Rgb{0, 0, 0}, 0, 1);
  int checked = 0, agree = 0;
  while (checked < 100) {
    const int w = 64, h = 64;
    LabelMap a(w, h), b(w, h);
    testing::fill_ellipse(a, 6 + rng.uniform_index(52), 6 + rng.uniform_index(52),
                          2 + rng.uniform_index(10), 2 + rng.uniform_index(10), 1);
    testing::fill_ellipse(b, 6 + rng.uniform_index(52), 6 + rng.uniform_index(52),
                          2 + rng.uniform_index(10), 2 + rng.uniform_index(10), 1);
    if (testing::touching(a, b)) continue;
    LabelMap labels(w, h);
    for (std::size_t i = 0; i < labels.data().size(); ++i) {
      labels.data()[i] = a.data()[i] | b.data()[i] ? 3 : 0;
    }
    RgbImage image = testing::random_image(rng, w, h);
    for (auto& v : image.data()) v = static_cast<std::uint8_t>(v | 1);
    const auto d = detect_instances(image, labels, predictor);
    const auto oracle = testing::flood_fill_components(labels, 3);
    ++checked;
    if (d.size() != 2 || oracle.size() != 2) continue;
    const bool matched = (d[0].mask == oracle[0] && d[1].mask == oracle[1]) ||
                         (d[0].mask == oracle[1] && d[1].mask == oracle[0]);
    agree += matched;
  }
  return {agree == checked, fmt("%d/%d fixtures split into the flood-fill components", agree,
                                checked)};
}

// ---------------------------------------------------------------------------
// 8. head graph

Outcome head_graph() {
  HeadGraph g = build_head(256);
  std::size_t errors = 0;
  try {
    g.validate();
  } catch (const HeadGraphError&) {
    ++errors;
  }
  const auto shapes = infer_shapes(g, 512, 512);
  const FeatureShape out = shapes.at(g.output().id);
  const std::int64_t ceb = shapes.at("context_ceb").channels;
  // Independent recount: twelve smoothing blocks, each in*out weights plus
  // bias, scale and shift per output channel.
  const std::int64_t c = 256;
  const std::int64_t ins[] = {2048, 1024, c, 512, c, 256, c, 2048, 1024, 512, 256, 5 * c};
  std::int64_t recount = 0;
  for (std::int64_t in : ins) recount += in * c + 3 * c;
  const std::int64_t params = param_count(g);
  const bool pass = out.height == 128 && out.width == 128 && ceb == 5 * 256 &&
                    errors == 0 && params == recount;
  return {pass, fmt("output %dx%dx%lld, CEB %lld channels, %lld parameters (recount %lld)",
                    out.height, out.width, static_cast<long long>(out.channels),
                    static_cast<long long>(ceb), static_cast<long long>(params),
                    static_cast<long long>(recount))};
}

// ---------------------------------------------------------------------------
// 9. evaluation oracles

Outcome evaluation() {
  Rng rng(9);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    LabelMap p(16, 16), t(16, 16);
    const int classes = 1 + static_cast<int>(rng.uniform_index(4));
    for (auto& v : p.data()) v = static_cast<ClassId>(rng.uniform_index(classes + 1));
    for (auto& v : t.data()) v = static_cast<ClassId>(rng.uniform_index(classes + 1));
    const IoUReport r = mask_miou(p, t);
    std::map<ClassId, std::pair<std::uint64_t, std::uint64_t>> want;
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        for (ClassId id = 1; id <= classes; ++id) {
          const bool in_p = p.at(x, y) == id, in_t = t.at(x, y) == id;
          if (in_p || in_t) {
            want[id].second += 1;
            want[id].first += in_p && in_t;
          }
        }
      }
    }
    if (r.per_class.size() != want.size()) {
      ++mismatches;
      continue;
    }
    std::size_t k = 0;
    for (const auto& [id, iu] : want) {
      const ClassIoU& c = r.per_class[k++];
      // Exact rational equality, then the quotient itself.
      mismatches += c.class_id != id || c.intersection * iu.second != iu.first * c.union_size ||
                    c.union_size != iu.second ||
                    c.iou != static_cast<double>(iu.first) / static_cast<double>(iu.second);
    }
    mismatches += mask_miou(t, t).mean != 1.0;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const Box a = testing::random_box(rng, 16, 16);
    const Box b = testing::random_box(rng, 16, 16);
    std::int64_t inter = 0, uni = 0;
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        inter += a.contains(x, y) && b.contains(x, y);
        uni += a.contains(x, y) || b.contains(x, y);
      }
    }
    const AreaRatio got = box_overlap(a, b);
    mismatches += got.intersection != inter || got.union_area != uni ||
                  box_iou(a, b) != static_cast<double>(inter) / static_cast<double>(uni);
    mismatches += box_iou(a, a) != 1.0;
  }
  return {mismatches == 0, fmt("2000 cases, %zu mismatches", mismatches)};
}

// ---------------------------------------------------------------------------
// 10. CLI determinism

int run_command(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out[e.path().filename().string()] = read_file_text(e.path());
  }
  return out;
}

// One string per scene: its image, label and box files concatenated.
std::multiset<std::string> scene_bytes(const fs::path& dir) {
  std::multiset<std::string> out;
  for (const ManifestRecord& r : Manifest::load(dir).records) {
    out.insert(read_file_text(dir / r.image) + read_file_text(dir / r.labels) +
               read_file_text(dir / r.boxes));
  }
  return out;
}

Outcome determinism() {
  if (cli_path.empty() || !fs::exists(cli_path)) {
    return {false, "clutterlab binary not found at '" + cli_path + "'"};
  }
  testing::TempDir dir("acceptance-determinism");
  FixtureSpec fs;
  fs.classes = 8;
  fs.images_per_class = 5;
  write_fixture_dataset(fs, dir / "corpus");
  auto synth = [&](const std::string& out, int workers) {
    return run_command(cli_path + " --seed 42 synthesize --count 100 --manifest " +
                       (dir / "corpus").string() + " --workers " + std::to_string(workers) +
                       " --out " + (dir / out).string());
  };
  if (synth("a", 1) != 0 || synth("b", 1) != 0 || synth("c", 24) != 0) {
    return {false, "synthesize exited non-zero"};
  }
  const auto a = directory_bytes(dir / "a");
  const bool repeat = a == directory_bytes(dir / "b");
  const auto sa = scene_bytes(dir / "a");
  const bool workers = sa == scene_bytes(dir / "c");
  return {repeat && workers && sa.size() == 100,
          fmt("%zu scenes; repeat %s; 1 vs 24 workers %s", sa.size(),
              repeat ? "byte-identical" : "differs", workers ? "same multiset" : "differs")};
}

// ---------------------------------------------------------------------------
// 11. worker scaling

Outcome throughput_scaling() {
  FixtureSpec fs;
  fs.classes = 10;
  fs.images_per_class = 10;
  const Corpus c(fs);
  ClutterSpec spec;
  spec.grid_size = 4;
  const double one = measure_clutter_throughput(c.registry, c.cache, spec, 300, 1, 11);
  const double four = measure_clutter_throughput(c.registry, c.cache, spec, 300, 4, 11);
  const unsigned cores = std::thread::hardware_concurrency();
  const double ratio = four / one;
  Outcome o;
  o.pass = ratio >= 2.0;
  o.detail = fmt("1 worker %.1f scenes/s, 4 workers %.1f scenes/s, ratio %.2f on %u core(s)",
                 one, four, ratio, cores);
  if (!o.pass && cores < 4) {
    o.unattainable = true;
    o.detail += "; needs a 4-core host";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clutterlab acceptance suite"};
  std::vector<int> selected;
  cli_path = CLUTTERLAB_CLI_PATH;
  app.add_option("--criterion", selected, "Criterion number(s) to run");
  app.add_option("--cli", cli_path, "Path to the clutterlab binary");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "fusion-rule suite", 5, fusion_suite},
      {2, "clutter ground-truth consistency", 120, clutter_consistency},
      {3, "bench structure", 300, bench_structure},
      {4, "sampling ratio", 60, sampling_ratio},
      {5, "consume-once", 600, consume_once},
      {6, "incremental registration", 600, incremental_registration},
      {7, "instance detection", 60, instance_detection},
      {8, "head graph", 60, head_graph},
      {9, "evaluation", 60, evaluation},
      {10, "determinism", 300, determinism},
      {11, "throughput scaling", 300, throughput_scaling},
  };

  int failed = 0, unattainable = 0, ran = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) == selected.end()) {
      continue;
    }
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", c.limit_s);
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.number << ". " << c.title << ": "
              << o.detail << fmt(" (%.2f s)", secs) << std::endl;
    if (!o.pass) {
      ++failed;
      unattainable += o.unattainable;
    }
  }
  if (ran == 0) {
    std::cerr << "no such criterion\n";
    return 1;
  }
  if (failed == 0) return 0;
  return failed == unattainable && ran == 1 ? kSkipped : 1;
}
