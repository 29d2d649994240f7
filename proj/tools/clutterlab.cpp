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

// clutterlab: batch annotation, clutter synthesis, the online pipeline and
// the supporting benchmarks from one command line.
//
// Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 internal error.

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"
#include "clutterlab/error.hpp"
#include "clutterlab/evaluation.hpp"
#include "clutterlab/fixtures.hpp"
#include "clutterlab/fusion.hpp"
#include "clutterlab/head_graph.hpp"
#include "clutterlab/instance_detection.hpp"
#include "clutterlab/pipeline.hpp"
#include "clutterlab/predictors.hpp"
#include "clutterlab/sample_cache.hpp"
#include "clutterlab/synthesis.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace clutterlab;

namespace {

constexpr const char* kManifestEnv = "CLUTTERLAB_MANIFEST";

struct Globals {
  bool json = false;
  bool verbose = false;
  std::uint64_t seed = 0;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

void log(const Globals& g, const std::string& line) {
  if (g.verbose) std::cerr << line << '\n';
}

std::vector<int> parse_int_list(const std::string& text, char sep) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("expected integers separated by '" +
                            std::string(1, sep) + "', got '" + text + "'");
    }
  }
  return out;
}

Rgb parse_rgb(const std::string& text) {
  const auto v = parse_int_list(text, ',');
  if (v.size() != 3 || std::any_of(v.begin(), v.end(),
                                   [](int c) { return c < 0 || c > 255; })) {
    throw ValidationError("colour must be r,g,b with components in 0..255");
  }
  return Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
             static_cast<std::uint8_t>(v[2])};
}

std::string manifest_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kManifestEnv)) return env;
  throw ValidationError(std::string("no manifest given; pass --manifest or set ") +
                        kManifestEnv);
}

json box_json(const Box& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

// ---------------------------------------------------------------------------
// annotate

struct AnnotateArgs {
  std::string input;
  std::string out;
  std::string predictor = "chroma_oracle";
  std::string box_predictor = "connected_components";
  std::string policy = "1,1";
  std::string label;
  std::string background;
  int tolerance = kFixtureTolerance;
};

struct InputImage {
  std::string origin;
  RgbImage image;
  std::string class_name;
  std::optional<AnnotatedSample> truth;
};

std::vector<InputImage> read_annotate_input(const AnnotateArgs& a) {
  const fs::path dir(a.input);
  if (!fs::is_directory(dir)) throw IoError(dir, "input is not a directory");
  std::vector<InputImage> out;
  if (fs::exists(dir / kManifestFile)) {
    const Manifest manifest = Manifest::load(dir);
    const ClassRegistry registry = load_registry(manifest);
    for (const ManifestRecord& r : manifest.records) {
      InputImage in;
      in.origin = r.id;
      AnnotatedSample s = load_sample(r, manifest.directory);
      in.image = s.image;
      if (!a.label.empty()) {
        in.class_name = a.label;
      } else if (r.class_ids.size() == 1) {
        in.class_name = registry.at(r.class_ids.front()).name;
      } else {
        throw ValidationError("record '" + r.id +
                              "' needs exactly one class or a --label");
      }
      in.truth = std::move(s);
      out.push_back(std::move(in));
    }
    return out;
  }
  if (a.label.empty()) {
    throw ValidationError("a directory of bare images needs --label");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    out.push_back(InputImage{f.filename().string(), read_rgb_png(f), a.label, {}});
  }
  return out;
}

int run_annotate(const Globals& g, const AnnotateArgs& a) {
  const auto priorities = parse_int_list(a.policy, ',');
  if (priorities.size() != 2) throw ValidationError("--policy expects pm,pb");
  const FusionPolicy policy{priorities[0], priorities[1]};

  std::vector<InputImage> inputs = read_annotate_input(a);

  PredictorOptions opts;
  opts.background = a.background.empty() ? kFixtureBackground : parse_rgb(a.background);
  opts.tolerance = a.tolerance;
  auto store = std::make_shared<FixtureStore>();
  for (const InputImage& in : inputs) {
    if (in.truth) store->remember(*in.truth);
  }
  opts.fixtures = store;
  const auto mask_pred = make_mask_predictor(a.predictor, opts);
  const auto box_pred = make_box_predictor(a.box_predictor, opts);

  // Label everything in memory first so a failure leaves no output behind.
  ClassRegistry registry;
  std::vector<AnnotatedSample> samples;
  json rows = json::array();
  for (InputImage& in : inputs) {
    const ClassEntry* entry = registry.find(in.class_name);
    const ClassId id = entry ? entry->id : registry.add(in.class_name);
    const BinaryMask mask = mask_pred->predict(in.image);
    const std::vector<Box> boxes = box_pred->predict(in.image);
    if (boxes.empty()) {
      throw EmptyFusionError("box predictor found nothing in '" + in.origin + "'");
    }
    const Box largest = *std::max_element(
        boxes.begin(), boxes.end(),
        [](const Box& x, const Box& y) { return x.area() < y.area(); });
    FusedAnnotation fused;
    try {
      fused = fuse(mask, largest, policy);
    } catch (const EmptyMaskError&) {
      throw EmptyFusionError("mask predictor found nothing in '" + in.origin + "'");
    }
    LabeledFragment frag = assign_label(fused, id, registry);
    AnnotatedSample s;
    s.image = std::move(in.image);
    s.labels = std::move(frag.labels);
    s.boxes.push_back(frag.box);
    s.source = Provenance::kAcquired;
    rows.push_back({{"input", in.origin},
                    {"class_id", id},
                    {"rule", std::string(to_string(fused.rule_applied))},
                    {"box", box_json(frag.box.box)}});
    if (!g.json) {
      std::cout << in.origin << ": " << to_string(fused.rule_applied) << ' '
                << to_string(frag.box.box) << '\n';
    }
    samples.push_back(std::move(s));
  }
  for (ClassEntry e : registry.entries()) {
    std::size_t n = 0;
    for (const AnnotatedSample& s : samples) n += s.boxes.front().class_id == e.id;
    registry.set_image_count(e.id, n);
  }

  DatasetWriter writer(a.out);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rows[i]["id"] = writer.save(samples[i]);
  }
  registry.save(fs::path(a.out) / kClassesFile);
  if (g.json) std::cout << json{{"samples", rows}}.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeArgs {
  std::string manifest;
  std::string out;
  int grid = 3;
  double tau = 0.25;
  std::size_t count = 1;
  int workers = 1;
  std::string base = "dataset_image";
  bool jitter = false;
  bool disk = false;
};

int run_synthesize(const Globals& g, const SynthesizeArgs& a) {
  const Manifest manifest = Manifest::load(manifest_or_env(a.manifest));
  ClutterSpec spec;
  spec.grid_size = a.grid;
  spec.visibility_threshold = a.tau;
  spec.base_policy = base_policy_from_string(a.base);
  spec.jitter = a.jitter;
  spec.validate();
  const ClassRegistry registry = load_registry(manifest);

  std::unique_ptr<SampleSource> source;
  if (a.disk) {
    source = std::make_unique<DiskSource>(manifest);
  } else {
    source = std::make_unique<SampleCache>(prefetch_all(manifest));
  }
  log(g, "synthesizing " + std::to_string(a.count) + " scenes on " +
             std::to_string(a.workers) + " workers");
  const auto results =
      synthesize_batch(registry, *source, spec, a.count, a.workers, g.seed);

  DatasetWriter writer(a.out);
  json scenes = json::array();
  double objects = 0.0;
  for (const SynthesisResult& r : results) {
    AnnotatedSample sample = r.sample;
    sample.id.clear();
    const std::string id = writer.save(sample);
    json classes = json::array();
    for (const BoxRecord& b : sample.boxes) classes.push_back(b.class_id);
    scenes.push_back({{"id", id},
                      {"objects", sample.boxes.size()},
                      {"classes", classes},
                      {"seed", sample.seed ? json(*sample.seed) : json(nullptr)}});
    objects += static_cast<double>(sample.boxes.size());
  }
  if (!results.empty()) registry.save(fs::path(a.out) / kClassesFile);
  const double mean = results.empty() ? 0.0 : objects / results.size();
  if (g.json) {
    std::cout << json{{"count", results.size()},
                      {"grid_size", a.grid},
                      {"mean_objects", mean},
                      {"scenes", scenes}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "wrote " << results.size() << " scenes to " << a.out
              << " (mean objects per scene " << mean << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline-run

struct PipelineArgs {
  std::string config;
  std::optional<std::size_t> max_scenes;
  std::optional<int> workers;
  std::string background;
  int tolerance = kFixtureTolerance;
};

std::shared_ptr<const FixtureStore> pipeline_fixtures(const PipelineConfig& c) {
  auto store = std::make_shared<FixtureStore>();
  if (c.mask_predictor != "stored_fixture" && c.box_predictor != "stored_fixture") {
    return store;
  }
  if (c.source_dir.empty()) {
    FixtureSpec spec;
    spec.classes = c.fixture_classes;
    spec.images_per_class = c.images_per_revolution;
    spec.seed = c.seed;
    for (const AnnotatedSample& s : make_fixture_samples(spec)) store->remember(s);
  } else {
    const Manifest m = Manifest::load(c.source_dir);
    for (const ManifestRecord& r : m.records) {
      store->remember(load_sample(r, m.directory));
    }
  }
  return store;
}

int run_pipeline_cmd(const Globals& g, const PipelineArgs& a) {
  PipelineConfig config = a.config.empty() ? PipelineConfig{}
                                           : PipelineConfig::load(a.config);
  if (a.max_scenes) config.max_scenes = a.max_scenes;
  if (a.workers) config.clutter_workers = *a.workers;
  config.validate();

  PredictorOptions opts;
  opts.background = a.background.empty() ? kFixtureBackground : parse_rgb(a.background);
  opts.tolerance = a.tolerance;
  opts.fixtures = pipeline_fixtures(config);
  const auto mask = make_mask_predictor(config.mask_predictor, opts);
  const auto box = make_box_predictor(config.box_predictor, opts);
  RecordingChild child(std::chrono::microseconds(
      static_cast<std::int64_t>(config.child_service_ms * 1000.0)));

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  log(g, "pipeline starting; interrupt to stop and drain");
  const PipelineReport report = run_pipeline(config, *mask, *box, child, &g_interrupted);
  std::cout << (g.json ? report.metrics.to_json() + "\n" : report.metrics.to_table());
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string manifest;
  std::string mode = "both";
  std::string grids = "3,4,5";
  std::size_t repetitions = 20;
  double tau = 0.25;
};

int run_bench(const Globals& g, const BenchArgs& a) {
  const Manifest manifest = Manifest::load(manifest_or_env(a.manifest));
  std::vector<BenchMode> modes;
  if (a.mode == "disk" || a.mode == "both") modes.push_back(BenchMode::kDisk);
  if (a.mode == "ram" || a.mode == "both") modes.push_back(BenchMode::kRam);
  if (modes.empty()) throw ValidationError("--mode must be disk, ram or both");
  ClutterSpec spec;
  spec.visibility_threshold = a.tau;
  const BenchReport report = bench_clutter(manifest, parse_int_list(a.grids, ','),
                                           a.repetitions, modes, spec, g.seed);
  std::cout << (g.json ? report.to_json() + "\n" : report.to_table());
  return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::string image;
  std::string labels;
  std::string out;
  int tolerance = 0;
  std::size_t min_area = kDefaultMinComponentArea;
};

int run_detect(const Globals& g, const DetectArgs& a) {
  const RgbImage image = read_rgb_png(a.image);
  const LabelMap labels = read_label_png(a.labels);
  const ComponentBoxPredictor predictor(Rgb{0, 0, 0}, a.tolerance, a.min_area);
  const auto detections = detect_instances(image, labels, predictor);
  std::string lines;
  for (const InstanceDetection& d : detections) lines += to_json_line(d) + '\n';
  if (!a.out.empty()) write_file_atomic(a.out, lines);
  if (g.json || a.out.empty()) {
    std::cout << lines;
  } else {
    std::cout << detections.size() << " instances written to " << a.out << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred;
  std::string truth;
};

int run_eval(const Globals& g, const EvalArgs& a) {
  const auto ext = [](const std::string& p) { return fs::path(p).extension().string(); };
  if (ext(a.pred) == ".png" && ext(a.truth) == ".png") {
    const IoUReport report = mask_miou(read_label_png(a.pred), read_label_png(a.truth));
    if (g.json) {
      std::cout << report.to_json() << '\n';
    } else {
      for (const ClassIoU& c : report.per_class) {
        std::cout << "class " << c.class_id << ": " << c.iou << " (" << c.intersection
                  << "/" << c.union_size << ")\n";
      }
      std::cout << "mean " << report.mean << '\n';
    }
    return 0;
  }
  if (ext(a.pred) == ".jsonl" && ext(a.truth) == ".jsonl") {
    const auto pred = parse_box_lines(read_file_text(a.pred), a.pred);
    const auto truth = parse_box_lines(read_file_text(a.truth), a.truth);
    std::map<ClassId, std::pair<std::vector<Box>, std::vector<Box>>> by_class;
    for (const BoxRecord& r : pred) by_class[r.class_id].first.push_back(r.box);
    for (const BoxRecord& r : truth) by_class[r.class_id].second.push_back(r.box);
    json per_class = json::array();
    double sum = 0.0;
    for (const auto& [id, sets] : by_class) {
      const double v = box_set_miou(sets.first, sets.second);
      per_class.push_back({{"class_id", id}, {"iou", v}});
      sum += v;
    }
    const double mean = by_class.empty() ? 1.0 : sum / by_class.size();
    if (g.json) {
      std::cout << json{{"per_class", per_class}, {"mean", mean}}.dump(2) << '\n';
    } else {
      for (const auto& row : per_class) {
        std::cout << "class " << row["class_id"] << ": " << row["iou"].get<double>() << '\n';
      }
      std::cout << "mean " << mean << '\n';
    }
    return 0;
  }
  throw ValidationError("eval takes two label PNGs or two box .jsonl files");
}

// ---------------------------------------------------------------------------
// head-shapes

struct HeadArgs {
  std::string input = "512x512";
  std::int64_t width = 256;
  std::int64_t output_width = 0;
};

int run_head_shapes(const Globals& g, const HeadArgs& a) {
  const auto dims = parse_int_list(a.input, 'x');
  if (dims.size() != 2) throw ValidationError("--input expects HxW");
  HeadGraph graph = build_head(a.width, a.output_width);
  graph.validate();
  const auto shapes = infer_shapes(graph, dims[0], dims[1]);
  if (g.json) {
    json j = json::parse(shapes_to_json(graph, shapes));
    j["param_count"] = param_count(graph);
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << shape_table(graph, shapes) << "parameters " << param_count(graph)
              << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fixtures

struct FixtureArgs {
  std::string out;
  int classes = 10;
  int images = 20;
  int size = 256;
  int backgrounds = 0;
};

int run_fixtures(const Globals& g, const FixtureArgs& a) {
  FixtureSpec spec;
  spec.classes = a.classes;
  spec.images_per_class = a.images;
  spec.width = spec.height = a.size;
  spec.backgrounds = a.backgrounds;
  spec.seed = g.seed;
  if (a.classes < 1 || a.images < 0 || a.size < 8 || a.backgrounds < 0) {
    throw ValidationError("fixtures need classes >= 1, images >= 0, size >= 8");
  }
  write_fixture_dataset(spec, a.out);
  const std::size_t n = static_cast<std::size_t>(a.classes) * a.images + a.backgrounds;
  if (g.json) {
    std::cout << json{{"directory", a.out}, {"samples", n}, {"classes", a.classes}}.dump(2)
              << '\n';
  } else {
    std::cout << "wrote " << n << " samples to " << a.out << '\n';
  }
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return 1;
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kInternal:
      return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clutterlab: occlusion-aware clutter synthesis toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on stdout");
  app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");
  app.add_option("--seed", g.seed, "Master seed");

  AnnotateArgs annotate;
  auto* c_annotate = app.add_subcommand("annotate", "Label images with a mask and box predictor");
  c_annotate->add_option("--input", annotate.input, "Input directory")->required();
  c_annotate->add_option("--out", annotate.out, "Output dataset directory")->required();
  c_annotate->add_option("--predictor", annotate.predictor, "Mask predictor");
  c_annotate->add_option("--box-predictor", annotate.box_predictor, "Box predictor");
  c_annotate->add_option("--policy", annotate.policy, "Priorities pm,pb");
  c_annotate->add_option("--label", annotate.label, "Class name for every image");
  c_annotate->add_option("--background", annotate.background, "Background r,g,b");
  c_annotate->add_option("--tolerance", annotate.tolerance, "Background tolerance");

  SynthesizeArgs synth;
  auto* c_synth = app.add_subcommand("synthesize", "Write synthetic cluttered scenes");
  c_synth->add_option("--manifest", synth.manifest, "Dataset manifest or directory");
  c_synth->add_option("--out", synth.out, "Output dataset directory")->required();
  c_synth->add_option("--grid", synth.grid, "Grid size M");
  c_synth->add_option("--tau", synth.tau, "Visibility threshold");
  c_synth->add_option("--count", synth.count, "Number of scenes");
  c_synth->add_option("--workers", synth.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_synth->add_option("--base", synth.base, "dataset_image, background_pool or blank");
  c_synth->add_flag("--jitter", synth.jitter, "Jitter anchors within cells");
  c_synth->add_flag("--disk", synth.disk, "Decode from disk instead of prefetching");

  PipelineArgs pipe;
  auto* c_pipe = app.add_subcommand("pipeline-run", "Run the online learning pipeline");
  c_pipe->add_option("--config", pipe.config, "Pipeline config JSON");
  c_pipe->add_option("--max-scenes", pipe.max_scenes, "Stop after this many scenes");
  c_pipe->add_option("--workers", pipe.workers, "Clutter workers");
  c_pipe->add_option("--background", pipe.background, "Background r,g,b");
  c_pipe->add_option("--tolerance", pipe.tolerance, "Background tolerance");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Per-scene synthesis timings by grid size");
  c_bench->add_option("--manifest", bench.manifest, "Dataset manifest or directory");
  c_bench->add_option("--mode", bench.mode, "disk, ram or both");
  c_bench->add_option("--grids", bench.grids, "Comma-separated grid sizes");
  c_bench->add_option("--reps", bench.repetitions, "Scenes per grid size")->check(CLI::PositiveNumber);
  c_bench->add_option("--tau", bench.tau, "Visibility threshold");

  DetectArgs detect;
  auto* c_detect = app.add_subcommand("detect", "Split a label map into instances");
  c_detect->add_option("--image", detect.image, "RGB PNG")->required();
  c_detect->add_option("--labels", detect.labels, "16-bit label PNG")->required();
  c_detect->add_option("--out", detect.out, "Write instances as JSON lines");
  c_detect->add_option("--tolerance", detect.tolerance, "Masked-background tolerance");
  c_detect->add_option("--min-area", detect.min_area, "Smallest component kept");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "mIoU of predictions against truth");
  c_eval->add_option("--pred", eval.pred, "Predicted label PNG or boxes .jsonl")->required();
  c_eval->add_option("--truth", eval.truth, "Truth label PNG or boxes .jsonl")->required();

  HeadArgs head;
  auto* c_head = app.add_subcommand("head-shapes", "Shape table of the segmentation head");
  c_head->add_option("--input", head.input, "Input size HxW");
  c_head->add_option("--width", head.width, "Head channel width");
  c_head->add_option("--output-width", head.output_width, "Output channels (default width)");

  FixtureArgs fixtures;
  auto* c_fix = app.add_subcommand("fixtures", "Write a synthetic single-instance dataset");
  c_fix->add_option("--out", fixtures.out, "Output dataset directory")->required();
  c_fix->add_option("--classes", fixtures.classes, "Number of classes");
  c_fix->add_option("--images", fixtures.images, "Images per class");
  c_fix->add_option("--size", fixtures.size, "Square image size");
  c_fix->add_option("--backgrounds", fixtures.backgrounds, "Extra empty backgrounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*c_annotate) return run_annotate(g, annotate);
    if (*c_synth) return run_synthesize(g, synth);
    if (*c_pipe) return run_pipeline_cmd(g, pipe);
    if (*c_bench) return run_bench(g, bench);
    if (*c_detect) return run_detect(g, detect);
    if (*c_eval) return run_eval(g, eval);
    if (*c_head) return run_head_shapes(g, head);
    if (*c_fix) return run_fixtures(g, fixtures);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
