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

#include "clutterlab/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "clutterlab/fixtures.hpp"

namespace clutterlab {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kSceneStream = 1;
constexpr std::uint64_t kGridStream = 2;
constexpr std::uint64_t kFeedStream = 3;
constexpr std::uint64_t kPickStream = 4;

constexpr auto kPollInterval = std::chrono::milliseconds(5);

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

FeedSelector::FeedSelector(std::uint64_t seed, double single_probability)
    : rng_(seed), p_single_(single_probability) {
  if (!(single_probability >= 0.0 && single_probability <= 1.0)) {
    throw ValidationError("single-instance probability must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  if (images_per_revolution < 1) {
    throw ValidationError("images_per_revolution must be >= 1");
  }
  if (source_dir.empty() && fixture_classes < 0) {
    throw ValidationError("fixture_classes must be >= 0");
  }
  if (labeling_workers < 1 || clutter_workers < 1) {
    throw ValidationError("worker counts must be >= 1");
  }
  if (queue_capacity < 1) throw ValidationError("queue_capacity must be >= 1");
  if (grid_sizes.empty()) throw ValidationError("grid_sizes must not be empty");
  for (int m : grid_sizes) {
    if (m < 1) throw ValidationError("grid sizes must be >= 1");
  }
  if (single_weight < 0 || multi_weight < 1) {
    throw ValidationError("feed weights need single >= 0 and multi >= 1");
  }
  if (paced && !(images_per_minute > 0.0)) {
    throw ValidationError("images_per_minute must be positive");
  }
  if (child_service_ms < 0.0) {
    throw ValidationError("child_service_ms must be >= 0");
  }
  clutter.validate();
}

std::string PipelineConfig::to_json() const {
  json j;
  j["source_dir"] = source_dir;
  j["fixture_classes"] = fixture_classes;
  j["images_per_revolution"] = images_per_revolution;
  j["mask_predictor"] = mask_predictor;
  j["box_predictor"] = box_predictor;
  j["labeling_policy"] = {{"mask_priority", labeling_policy.mask_priority},
                          {"box_priority", labeling_policy.box_priority}};
  j["labeling_workers"] = labeling_workers;
  j["clutter_workers"] = clutter_workers;
  j["clutter"] = json::parse(clutter.to_json());
  j["grid_sizes"] = grid_sizes;
  j["queue_capacity"] = queue_capacity;
  j["single_to_multi"] = {single_weight, multi_weight};
  j["prefetch"] = prefetch;
  j["consume_once"] = consume_once;
  j["seed"] = seed;
  j["max_scenes"] = max_scenes ? json(*max_scenes) : json(nullptr);
  j["paced"] = paced;
  j["images_per_minute"] = images_per_minute;
  j["child_service_ms"] = child_service_ms;
  j["hold_acquisition_open"] = hold_acquisition_open;
  j["serial"] = serial;
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(std::string_view text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("pipeline config must be an object");
    c.source_dir = j.value("source_dir", c.source_dir);
    c.fixture_classes = j.value("fixture_classes", c.fixture_classes);
    c.images_per_revolution =
        j.value("images_per_revolution", c.images_per_revolution);
    c.mask_predictor = j.value("mask_predictor", c.mask_predictor);
    c.box_predictor = j.value("box_predictor", c.box_predictor);
    if (j.contains("labeling_policy")) {
      const json& p = j.at("labeling_policy");
      c.labeling_policy.mask_priority = p.value("mask_priority", 1);
      c.labeling_policy.box_priority = p.value("box_priority", 1);
    }
    c.labeling_workers = j.value("labeling_workers", c.labeling_workers);
    c.clutter_workers = j.value("clutter_workers", c.clutter_workers);
    if (j.contains("clutter")) c.clutter = ClutterSpec::from_json(j.at("clutter").dump());
    c.grid_sizes = j.value("grid_sizes", c.grid_sizes);
    c.queue_capacity = j.value("queue_capacity", c.queue_capacity);
    if (j.contains("single_to_multi")) {
      const auto ratio = j.at("single_to_multi").get<std::vector<int>>();
      if (ratio.size() != 2) throw ValidationError("single_to_multi needs two weights");
      c.single_weight = ratio[0];
      c.multi_weight = ratio[1];
    }
    c.prefetch = j.value("prefetch", c.prefetch);
    c.consume_once = j.value("consume_once", c.consume_once);
    c.seed = j.value("seed", c.seed);
    if (j.contains("max_scenes") && !j.at("max_scenes").is_null()) {
      c.max_scenes = j.at("max_scenes").get<std::size_t>();
    }
    c.paced = j.value("paced", c.paced);
    c.images_per_minute = j.value("images_per_minute", c.images_per_minute);
    c.child_service_ms = j.value("child_service_ms", c.child_service_ms);
    c.hold_acquisition_open =
        j.value("hold_acquisition_open", c.hold_acquisition_open);
    c.serial = j.value("serial", c.serial);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& file) {
  return from_json(read_file_text(file));
}

// ---------------------------------------------------------------------------
// Acquisition sources

std::vector<AcquisitionItem> replay_items(const Manifest& manifest,
                                          int images_per_revolution,
                                          bool prefetch) {
  const ClassRegistry registry = load_registry(manifest);
  std::map<ClassId, std::vector<const ManifestRecord*>> by_class;
  for (const ManifestRecord& r : manifest.records) {
    if (r.source == Provenance::kSynthesized || r.class_ids.size() != 1) continue;
    auto& list = by_class[r.class_ids.front()];
    if (static_cast<int>(list.size()) < images_per_revolution) list.push_back(&r);
  }
  std::vector<AcquisitionItem> items;
  for (const auto& [id, records] : by_class) {
    const ClassEntry* entry = registry.find(id);
    AcquisitionItem item;
    item.name = entry ? entry->name : "class_" + std::to_string(id);
    for (const ManifestRecord* r : records) {
      const std::filesystem::path file = manifest.directory / r->image;
      if (prefetch) {
        auto image = std::make_shared<const RgbImage>(read_rgb_png(file));
        item.images.push_back([image] { return *image; });
      } else {
        item.images.push_back([file] { return read_rgb_png(file); });
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<AcquisitionItem> fixture_items(int classes,
                                           int images_per_revolution,
                                           std::uint64_t seed) {
  FixtureSpec spec;
  spec.classes = classes;
  spec.images_per_class = images_per_revolution;
  spec.seed = seed;
  std::vector<AcquisitionItem> items;
  for (int c = 0; c < classes; ++c) {
    AcquisitionItem item;
    item.name = fixture_class_name(c);
    for (int i = 0; i < images_per_revolution; ++i) {
      item.images.push_back(
          [spec, c, i] { return make_fixture_sample(spec, c, i).image; });
    }
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// Metrics

const StageStats& StageMetrics::stage(std::string_view name) const {
  for (const StageStats& s : stages) {
    if (s.name == name) return s;
  }
  throw ValidationError("no stage named '" + std::string(name) + "'");
}

std::string StageMetrics::to_json() const {
  json j;
  j["elapsed_s"] = elapsed_s;
  json stages_json = json::array();
  for (const StageStats& s : stages) {
    stages_json.push_back({{"name", s.name},
                           {"processed", s.processed},
                           {"mean_latency_ms", s.mean_latency_ms},
                           {"throughput_per_s", s.throughput_per_s},
                           {"queue_depth", s.queue_depth},
                           {"max_queue_depth", s.max_queue_depth},
                           {"queue_capacity", s.queue_capacity},
                           {"defects", s.defects}});
  }
  j["stages"] = stages_json;
  json scenes_json = json::array();
  for (const SceneTimingSummary& t : scene_timings) {
    scenes_json.push_back({{"grid_size", t.grid_size},
                           {"scenes", t.scenes},
                           {"decode_ms", t.decode_ms},
                           {"transfer_ms", t.transfer_ms},
                           {"visibility_ms", t.visibility_ms},
                           {"total_ms", t.total_ms}});
  }
  j["scene_timings"] = scenes_json;
  j["flow"] = {{"acquired", flow.acquired},
               {"labeled", flow.labeled},
               {"label_dropped", flow.label_dropped},
               {"scenes_synthesized", flow.scenes_synthesized},
               {"scenes_delivered", flow.scenes_delivered},
               {"scenes_discarded", flow.scenes_discarded},
               {"scene_redeliveries", flow.scene_redeliveries},
               {"singles_delivered", flow.singles_delivered}};
  j["child"] = {{"consumed", child.consumed},
                {"defects", child.defects},
                {"single_instance", child.single_instance},
                {"synthesized", child.synthesized},
                {"duplicate_synthesized", child.duplicate_synthesized},
                {"rate_per_s", child.rate_per_s}};
  return j.dump(2);
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// Left-aligned first column, right-aligned rest.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pad(widths[i] - row[i].size(), ' ');
      if (i == 0) {
        out << row[i] << pad;
      } else {
        out << "  " << pad << row[i];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string StageMetrics::to_table() const {
  std::vector<std::vector<std::string>> rows{
      {"stage", "processed", "latency_ms", "items/s", "queue", "max_queue",
       "capacity", "defects"}};
  for (const StageStats& s : stages) {
    rows.push_back({s.name, std::to_string(s.processed),
                    fmt("%.2f", s.mean_latency_ms),
                    fmt("%.1f", s.throughput_per_s),
                    std::to_string(s.queue_depth),
                    std::to_string(s.max_queue_depth),
                    s.queue_capacity ? std::to_string(s.queue_capacity) : "-",
                    std::to_string(s.defects)});
  }
  std::string out = render_table(rows);
  if (!scene_timings.empty()) {
    std::vector<std::vector<std::string>> t{
        {"grid", "scenes", "decode_ms", "transfer_ms", "visibility_ms",
         "total_ms"}};
    for (const SceneTimingSummary& s : scene_timings) {
      t.push_back({std::to_string(s.grid_size) + "x" + std::to_string(s.grid_size),
                   std::to_string(s.scenes), fmt("%.2f", s.decode_ms),
                   fmt("%.2f", s.transfer_ms), fmt("%.2f", s.visibility_ms),
                   fmt("%.2f", s.total_ms)});
    }
    out += '\n' + render_table(t);
  }
  out += '\n' + fmt("elapsed %.3f s", elapsed_s) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

// Ground truths produced so far. Planners read immutable snapshots; the
// labeling stage is the only writer.
class LiveStore {
 public:
  struct Snapshot {
    std::shared_ptr<const SampleCache> cache;
    std::shared_ptr<const ClassRegistry> planner;  // classes with ground truth
    std::uint64_t version = 0;
  };

  LiveStore()
      : cache_(std::make_shared<const SampleCache>()),
        planner_(std::make_shared<const ClassRegistry>()) {}

  ClassId register_item(std::string name) {
    std::lock_guard lock(mu_);
    return all_.add(std::move(name));
  }

  ClassRegistry registry() const {
    std::lock_guard lock(mu_);
    return all_;
  }

  Snapshot snapshot() const {
    std::lock_guard lock(mu_);
    return Snapshot{cache_, planner_, version_};
  }

  void add(AnnotatedSample sample, ClassId id) {
    auto ptr = std::make_shared<const AnnotatedSample>(std::move(sample));
    {
      std::lock_guard lock(mu_);
      cache_ = std::make_shared<const SampleCache>(cache_->with_sample(ptr));
      ++version_;
      const std::size_t count = ++counts_[id];
      all_.set_image_count(id, count);
      if (count == 1) first_.emplace(id, version_);
      ClassRegistry planner;
      for (const auto& [cid, n] : counts_) {
        planner.insert(cid, all_.at(cid).name, n);
      }
      planner_ = std::make_shared<const ClassRegistry>(std::move(planner));
    }
    cv_.notify_all();
  }

  // Waits until the version moves past `seen` or the timeout expires.
  void wait_for_change(std::uint64_t seen) const {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, kPollInterval, [&] { return version_ != seen; });
  }

  void notify() const { cv_.notify_all(); }

  std::map<ClassId, std::uint64_t> first_ground_truth() const {
    std::lock_guard lock(mu_);
    return first_;
  }

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  ClassRegistry all_;
  std::shared_ptr<const SampleCache> cache_;
  std::shared_ptr<const ClassRegistry> planner_;
  std::uint64_t version_ = 0;
  std::map<ClassId, std::size_t> counts_;
  std::map<ClassId, std::uint64_t> first_;
};

struct StageCounters {
  std::atomic<std::size_t> processed{0};
  std::atomic<std::uint64_t> latency_ns{0};
  std::atomic<std::size_t> defects{0};

  void record(Clock::time_point start, Clock::time_point end) {
    latency_ns += static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(end - start)
            .count());
    ++processed;
  }
};

struct PendingImage {
  ClassId class_id = 0;
  std::size_t index = 0;
  std::function<RgbImage()> load;
};

struct AcquiredImage {
  ClassId class_id = 0;
  std::size_t index = 0;
  RgbImage image;
};

}  // namespace

struct Pipeline::State {
  State(PipelineConfig cfg, const MaskPredictor& m, const BoxPredictor& b,
        ChildConsumer& c)
      : config(std::move(cfg)),
        mask(m),
        box(b),
        child(c),
        acquired_q(config.queue_capacity),
        scene_q(config.queue_capacity) {}

  PipelineConfig config;
  const MaskPredictor& mask;
  const BoxPredictor& box;
  ChildConsumer& child;

  std::atomic<bool> started{false};
  std::atomic<bool> stop{false};
  std::atomic<bool> aborted{false};
  std::atomic<bool> labeling_done{false};
  const std::atomic<bool>* external_stop = nullptr;

  std::mutex pending_mu;
  std::condition_variable pending_cv;
  std::deque<PendingImage> pending;
  bool acquisition_closed = false;

  LiveStore store;
  BoundedQueue<AcquiredImage> acquired_q;
  BoundedQueue<SamplePtr> scene_q;

  StageCounters acquisition, labeling, clutter, feed;
  std::atomic<std::size_t> label_seq{0};
  std::atomic<std::size_t> scene_claims{0};
  std::atomic<std::size_t> scenes_synthesized{0};
  std::atomic<std::size_t> scenes_delivered{0};
  std::atomic<std::size_t> scene_push_failures{0};
  std::atomic<std::size_t> scene_redeliveries{0};
  std::atomic<std::size_t> singles_delivered{0};
  std::atomic<int> labelers_running{0};
  std::atomic<int> clutter_running{0};

  std::mutex scenes_mu;
  std::vector<SceneRecord> scenes;
  std::function<void(const SceneRecord&)> on_scene;

  std::mutex error_mu;
  std::optional<StageError> error;

  bool stopping() const {
    return stop.load() || (external_stop && external_stop->load());
  }

  void request_stop() {
    stop = true;
    pending_cv.notify_all();
    store.notify();
  }

  void fail(const std::string& stage, std::exception_ptr ex) {
    {
      std::lock_guard lock(error_mu);
      if (!error) {
        try {
          std::rethrow_exception(ex);
        } catch (const Error& e) {
          error.emplace(stage, e.kind(), e.what());
        } catch (const std::exception& e) {
          error.emplace(stage, ErrorKind::kInternal, e.what());
        } catch (...) {
          error.emplace(stage, ErrorKind::kInternal, "unknown exception");
        }
      }
    }
    aborted = true;
    request_stop();
    acquired_q.close();
    scene_q.close();
  }

  void enqueue(ClassId id, AcquisitionItem& item) {
    std::lock_guard lock(pending_mu);
    if (acquisition_closed) {
      throw ValidationError("acquisition is closed; cannot add '" + item.name + "'");
    }
    for (std::size_t i = 0; i < item.images.size(); ++i) {
      pending.push_back(PendingImage{id, i, std::move(item.images[i])});
    }
    pending_cv.notify_all();
  }

  void close_acquisition() {
    {
      std::lock_guard lock(pending_mu);
      acquisition_closed = true;
    }
    pending_cv.notify_all();
  }

  std::optional<PendingImage> next_pending() {
    std::unique_lock lock(pending_mu);
    while (true) {
      if (stopping()) return std::nullopt;
      if (!pending.empty()) {
        PendingImage p = std::move(pending.front());
        pending.pop_front();
        return p;
      }
      if (acquisition_closed) return std::nullopt;
      pending_cv.wait_for(lock, kPollInterval);
    }
  }

  // -- acquisition ----------------------------------------------------------

  void run_acquisition() {
    const auto interval = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(60.0 / config.images_per_minute));
    auto next_emit = Clock::now();
    while (auto p = next_pending()) {
      const auto t0 = Clock::now();
      AcquiredImage item{p->class_id, p->index, p->load()};
      acquisition.record(t0, Clock::now());
      if (config.paced) {
        next_emit += interval;
        std::this_thread::sleep_until(next_emit);
      }
      if (!acquired_q.push(std::move(item))) break;
    }
    acquired_q.close();
  }

  // -- labeling -------------------------------------------------------------

  // Returns nullopt when the tutor output cannot be fused; such images are
  // dropped and counted as defects.
  std::optional<AnnotatedSample> label(const AcquiredImage& in,
                                       const MaskPredictor& m,
                                       const BoxPredictor& b) {
    try {
      const BinaryMask mask_pred = m.predict(in.image);
      const std::vector<Box> boxes = b.predict(in.image);
      if (boxes.empty()) return std::nullopt;
      const Box largest = *std::max_element(
          boxes.begin(), boxes.end(),
          [](const Box& x, const Box& y) { return x.area() < y.area(); });
      const FusedAnnotation fused = fuse(mask_pred, largest, config.labeling_policy);
      LabeledFragment frag = assign_label(fused, in.class_id, store.registry());
      AnnotatedSample s;
      char id[32];
      std::snprintf(id, sizeof(id), "gt-%06zu", label_seq.fetch_add(1));
      s.id = id;
      s.image = in.image;
      s.labels = std::move(frag.labels);
      s.boxes.push_back(frag.box);
      s.source = Provenance::kAcquired;
      return s;
    } catch (const EmptyMaskError&) {
      return std::nullopt;
    } catch (const EmptyFusionError&) {
      return std::nullopt;
    }
  }

  void run_labeling() {
    std::unique_ptr<MaskPredictor> own_mask;
    std::unique_ptr<BoxPredictor> own_box;
    const MaskPredictor* m = &mask;
    const BoxPredictor* b = &box;
    if (!mask.shareable()) m = (own_mask = mask.clone()).get();
    if (!box.shareable()) b = (own_box = box.clone()).get();
    while (auto in = acquired_q.pop()) {
      const auto t0 = Clock::now();
      auto sample = label(*in, *m, *b);
      if (sample) {
        store.add(std::move(*sample), in->class_id);
      } else {
        ++labeling.defects;
      }
      labeling.record(t0, Clock::now());
    }
  }

  void finish_labeler() {
    if (--labelers_running == 0) {
      labeling_done = true;
      store.notify();
    }
  }

  // -- clutter --------------------------------------------------------------

  SamplePtr make_scene(int worker, std::uint64_t counter,
                       const LiveStore::Snapshot& snap) {
    const auto t0 = Clock::now();
    ClutterSpec spec = config.clutter;
    Rng grid_rng(derive_seed(config.seed, {kGridStream,
                                           static_cast<std::uint64_t>(worker),
                                           counter}));
    spec.grid_size = config.grid_sizes[grid_rng.uniform_index(config.grid_sizes.size())];
    spec.seed = derive_seed(config.seed, {kSceneStream,
                                          static_cast<std::uint64_t>(worker),
                                          counter});
    SynthesisResult result = synthesize_scene(*snap.planner, *snap.cache, spec);
    char id[48];
    std::snprintf(id, sizeof(id), "scene-w%02d-%08" PRIu64, worker, counter);
    result.sample.id = id;
    if (find_sample_defect(result.sample)) ++clutter.defects;

    SceneRecord rec;
    rec.id = id;
    rec.worker = worker;
    rec.counter = counter;
    rec.grid_size = spec.grid_size;
    rec.store_version = snap.version;
    rec.classes = present_ids(result.sample.labels);
    rec.timings = result.timings;
    clutter.record(t0, Clock::now());
    ++scenes_synthesized;
    std::function<void(const SceneRecord&)> callback;
    {
      std::lock_guard lock(scenes_mu);
      scenes.push_back(rec);
      callback = on_scene;
    }
    if (callback) callback(rec);
    return std::make_shared<const AnnotatedSample>(std::move(result.sample));
  }

  // Claims a scene slot; false once max_scenes slots are taken.
  bool claim_scene() {
    if (!config.max_scenes) return true;
    return scene_claims.fetch_add(1) < *config.max_scenes;
  }

  void run_clutter(int worker) {
    std::uint64_t counter = 0;
    while (!stopping()) {
      const LiveStore::Snapshot snap = store.snapshot();
      const bool done_labeling = labeling_done.load();
      if (snap.planner->empty()) {
        if (done_labeling) break;
        store.wait_for_change(snap.version);
        continue;
      }
      // Without a scene bound, synthesis follows the replay.
      if (!config.max_scenes && done_labeling) break;
      if (!claim_scene()) break;
      SamplePtr scene = make_scene(worker, counter++, snap);
      if (!scene_q.push(std::move(scene))) {
        ++scene_push_failures;
        break;
      }
    }
  }

  void finish_clutter() {
    if (--clutter_running == 0) scene_q.close();
  }

  // -- feed -----------------------------------------------------------------

  void deliver(const AnnotatedSample& sample, StageCounters& counters) {
    const auto t0 = Clock::now();
    child.consume(std::span<const AnnotatedSample>(&sample, 1));
    counters.record(t0, Clock::now());
  }

  // Uniform pick among the ground truths, waiting for the first one.
  SamplePtr pick_single(Rng& rng) {
    while (!aborted) {
      const LiveStore::Snapshot snap = store.snapshot();
      if (snap.cache->size() > 0) {
        const auto& ids = snap.cache->ids();
        return snap.cache->fetch(ids[rng.uniform_index(ids.size())]);
      }
      if (labeling_done) return nullptr;
      store.wait_for_change(snap.version);
    }
    return nullptr;
  }

  void run_feed() {
    FeedSelector selector(derive_seed(config.seed, {kFeedStream}),
                          config.single_probability());
    Rng pick(derive_seed(config.seed, {kPickStream}));
    std::vector<SamplePtr> reuse;
    while (!aborted) {
      if (selector.next_is_single()) {
        SamplePtr s = pick_single(pick);
        if (!s) break;
        deliver(*s, feed);
        ++singles_delivered;
        continue;
      }
      SamplePtr scene;
      if (config.consume_once) {
        auto next = scene_q.pop();
        if (!next) break;
        scene = std::move(*next);
        ++scenes_delivered;
      } else if (auto next = scene_q.try_pop()) {
        scene = std::move(*next);
        reuse.push_back(scene);
        ++scenes_delivered;
      } else if (!reuse.empty() && !scene_q.closed()) {
        scene = reuse[pick.uniform_index(reuse.size())];
        ++scene_redeliveries;
      } else {
        auto blocking = scene_q.pop();
        if (!blocking) break;
        scene = std::move(*blocking);
        reuse.push_back(scene);
        ++scenes_delivered;
      }
      deliver(*scene, feed);
    }
  }

  // -- serial mode ----------------------------------------------------------

  void run_serial() {
    while (auto p = next_pending()) {
      const auto t0 = Clock::now();
      AcquiredImage item{p->class_id, p->index, p->load()};
      acquisition.record(t0, Clock::now());
      const auto t1 = Clock::now();
      auto sample = label(item, mask, box);
      if (sample) {
        store.add(std::move(*sample), item.class_id);
      } else {
        ++labeling.defects;
      }
      labeling.record(t1, Clock::now());
    }
    labeling_done = true;

    FeedSelector selector(derive_seed(config.seed, {kFeedStream}),
                          config.single_probability());
    Rng pick(derive_seed(config.seed, {kPickStream}));
    const std::size_t workers = static_cast<std::size_t>(config.clutter_workers);
    std::size_t produced = 0;
    while (!stopping()) {
      if (selector.next_is_single()) {
        SamplePtr s = pick_single(pick);
        if (!s) break;
        deliver(*s, feed);
        ++singles_delivered;
        continue;
      }
      const LiveStore::Snapshot snap = store.snapshot();
      if (!config.max_scenes || produced >= *config.max_scenes ||
          snap.planner->empty()) {
        break;
      }
      SamplePtr scene = make_scene(static_cast<int>(produced % workers),
                                   produced / workers, snap);
      ++produced;
      ++scenes_delivered;
      deliver(*scene, feed);
    }
  }

  template <typename F>
  std::thread spawn(std::string stage, F body) {
    return std::thread([this, stage = std::move(stage), body]() mutable {
      try {
        body();
      } catch (...) {
        fail(stage, std::current_exception());
      }
    });
  }
};

Pipeline::Pipeline(PipelineConfig config, std::vector<AcquisitionItem> items,
                   const MaskPredictor& mask, const BoxPredictor& box,
                   ChildConsumer& child) {
  config.validate();
  state_ = std::make_unique<State>(std::move(config), mask, box, child);
  for (AcquisitionItem& item : items) add_item(std::move(item));
  if (!state_->config.hold_acquisition_open) state_->close_acquisition();
}

Pipeline::~Pipeline() = default;

ClassId Pipeline::register_item(std::string name) {
  return state_->store.register_item(std::move(name));
}

ClassId Pipeline::add_item(AcquisitionItem item) {
  {
    std::lock_guard lock(state_->pending_mu);
    if (state_->acquisition_closed) {
      throw ValidationError("acquisition is closed; cannot add '" + item.name + "'");
    }
  }
  const ClassId id = register_item(item.name);
  state_->enqueue(id, item);
  return id;
}

void Pipeline::close_acquisition() { state_->close_acquisition(); }

void Pipeline::request_stop() { state_->request_stop(); }

void Pipeline::on_scene(std::function<void(const SceneRecord&)> callback) {
  std::lock_guard lock(state_->scenes_mu);
  state_->on_scene = std::move(callback);
}

PipelineReport Pipeline::run() {
  State& s = *state_;
  if (s.started.exchange(true)) throw ValidationError("pipeline already ran");
  s.external_stop = external_stop_;
  const auto t_start = Clock::now();

  if (s.config.serial) {
    try {
      s.run_serial();
    } catch (...) {
      s.fail("serial", std::current_exception());
    }
  } else {
    std::vector<std::thread> threads;
    s.labelers_running = s.config.labeling_workers;
    s.clutter_running = s.config.clutter_workers;
    threads.push_back(s.spawn("acquisition", [&s] { s.run_acquisition(); }));
    for (int i = 0; i < s.config.labeling_workers; ++i) {
      threads.push_back(s.spawn("labeling", [&s] {
        struct Done {
          State& s;
          ~Done() { s.finish_labeler(); }
        } done{s};
        s.run_labeling();
      }));
    }
    for (int w = 0; w < s.config.clutter_workers; ++w) {
      threads.push_back(s.spawn("clutter", [&s, w] {
        struct Done {
          State& s;
          ~Done() { s.finish_clutter(); }
        } done{s};
        s.run_clutter(w);
      }));
    }
    threads.push_back(s.spawn("feed", [&s] {
      s.run_feed();
      // Nothing downstream remains; stop acquisition so the rest drains.
      s.request_stop();
    }));
    for (std::thread& t : threads) t.join();
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - t_start).count();

  {
    std::lock_guard lock(s.error_mu);
    if (s.error) throw *s.error;
  }

  PipelineReport report;
  StageMetrics& m = report.metrics;
  m.elapsed_s = elapsed;
  auto stats = [&](const char* name, const StageCounters& c,
                   const BoundedQueue<AcquiredImage>* aq,
                   const BoundedQueue<SamplePtr>* sq) {
    StageStats st;
    st.name = name;
    st.processed = c.processed.load();
    st.mean_latency_ms =
        st.processed ? static_cast<double>(c.latency_ns.load()) / 1e6 / st.processed
                     : 0.0;
    st.throughput_per_s = elapsed > 0.0 ? st.processed / elapsed : 0.0;
    st.defects = c.defects.load();
    if (aq) {
      st.queue_depth = aq->size();
      st.max_queue_depth = aq->max_depth();
      st.queue_capacity = aq->capacity();
    }
    if (sq) {
      st.queue_depth = sq->size();
      st.max_queue_depth = sq->max_depth();
      st.queue_capacity = sq->capacity();
    }
    return st;
  };
  m.stages.push_back(stats("acquisition", s.acquisition, nullptr, nullptr));
  m.stages.push_back(stats("labeling", s.labeling, &s.acquired_q, nullptr));
  m.stages.push_back(stats("clutter", s.clutter, nullptr, nullptr));
  m.stages.push_back(stats("feed", s.feed, nullptr, &s.scene_q));
  m.child = s.child.metrics();
  m.stages.back().defects = m.child.defects;

  FlowCounters& f = m.flow;
  f.acquired = s.acquisition.processed.load();
  f.label_dropped = s.labeling.defects.load();
  f.labeled = s.labeling.processed.load() - f.label_dropped;
  f.scenes_synthesized = s.scenes_synthesized.load();
  f.scenes_delivered = s.scenes_delivered.load();
  f.scenes_discarded = s.scene_q.size() + s.scene_push_failures.load();
  f.scene_redeliveries = s.scene_redeliveries.load();
  f.singles_delivered = s.singles_delivered.load();

  report.scenes = std::move(s.scenes);
  std::map<int, SceneTimingSummary> by_grid;
  for (const SceneRecord& r : report.scenes) {
    SceneTimingSummary& t = by_grid[r.grid_size];
    t.grid_size = r.grid_size;
    ++t.scenes;
    t.decode_ms += r.timings.decode_ms;
    t.transfer_ms += r.timings.transfer_ms;
    t.visibility_ms += r.timings.visibility_ms;
    t.total_ms += r.timings.total_ms;
  }
  for (auto& [grid, t] : by_grid) {
    const double n = static_cast<double>(t.scenes);
    t.decode_ms /= n;
    t.transfer_ms /= n;
    t.visibility_ms /= n;
    t.total_ms /= n;
    m.scene_timings.push_back(t);
  }
  report.registry = s.store.registry();
  report.first_ground_truth = s.store.first_ground_truth();
  return report;
}

PipelineReport run_pipeline(const PipelineConfig& config,
                            const MaskPredictor& mask, const BoxPredictor& box,
                            ChildConsumer& child,
                            const std::atomic<bool>* stop) {
  config.validate();
  std::vector<AcquisitionItem> items =
      config.source_dir.empty()
          ? fixture_items(config.fixture_classes, config.images_per_revolution,
                          config.seed)
          : replay_items(Manifest::load(config.source_dir),
                         config.images_per_revolution, config.prefetch);
  Pipeline pipeline(config, std::move(items), mask, box, child);
  pipeline.set_external_stop(stop);
  return pipeline.run();
}

// ---------------------------------------------------------------------------
// Batch synthesis and benchmarking

std::vector<SynthesisResult> synthesize_batch(const ClassRegistry& registry,
                                              const SampleSource& source,
                                              const ClutterSpec& spec,
                                              std::size_t count, int workers,
                                              std::uint64_t seed) {
  if (workers < 1) throw ValidationError("workers must be >= 1");
  spec.validate();
  if (count > 0 && registry.empty()) {
    throw ValidationError("cannot synthesize from an empty class registry");
  }
  std::vector<std::optional<SynthesisResult>> slots(count);
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        ClutterSpec scene_spec = spec;
        scene_spec.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
        slots[i] = synthesize_scene(registry, source, scene_spec);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  const int n = static_cast<int>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (n == 1) {
    body();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < n; ++w) threads.emplace_back(body);
    for (std::thread& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<SynthesisResult> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

double measure_clutter_throughput(const ClassRegistry& registry,
                                  const SampleSource& source,
                                  const ClutterSpec& spec, std::size_t scenes,
                                  int workers, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto results = synthesize_batch(registry, source, spec, scenes, workers, seed);
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  return s > 0.0 ? results.size() / s : 0.0;
}

std::string_view to_string(BenchMode mode) {
  return mode == BenchMode::kDisk ? "disk" : "ram";
}

const BenchRow& BenchReport::row(BenchMode mode, int grid_size) const {
  for (const BenchRow& r : rows) {
    if (r.mode == mode && r.grid_size == grid_size) return r;
  }
  throw ValidationError("no bench row for " + std::string(to_string(mode)) +
                        " grid " + std::to_string(grid_size));
}

std::string BenchReport::to_json() const {
  json j;
  j["corpus_images"] = corpus_images;
  json rows_json = json::array();
  for (const BenchRow& r : rows) {
    rows_json.push_back({{"mode", std::string(to_string(r.mode))},
                         {"grid_size", r.grid_size},
                         {"scenes", r.scenes},
                         {"decode_ms", r.decode_ms},
                         {"transfer_ms", r.transfer_ms},
                         {"visibility_ms", r.visibility_ms},
                         {"total_ms", r.total_ms}});
  }
  j["rows"] = rows_json;
  return j.dump(2);
}

std::string BenchReport::to_table() const {
  std::vector<std::vector<std::string>> t{
      {"mode", "grid", "scenes", "image_decoding_ms", "object_transfer_ms",
       "visibility_check_ms", "total_ms"}};
  for (const BenchRow& r : rows) {
    t.push_back({std::string(to_string(r.mode)),
                 std::to_string(r.grid_size) + "x" + std::to_string(r.grid_size),
                 std::to_string(r.scenes), fmt("%.2f", r.decode_ms),
                 fmt("%.2f", r.transfer_ms), fmt("%.2f", r.visibility_ms),
                 fmt("%.2f", r.total_ms)});
  }
  return render_table(t);
}

BenchReport bench_clutter(const Manifest& manifest,
                          const std::vector<int>& grid_sizes,
                          std::size_t repetitions,
                          const std::vector<BenchMode>& modes,
                          const ClutterSpec& base_spec, std::uint64_t seed) {
  if (repetitions == 0) throw ValidationError("repetitions must be >= 1");
  const ClassRegistry registry = load_registry(manifest);
  if (registry.empty()) throw ValidationError("bench corpus has no classes");
  BenchReport report;
  report.corpus_images = manifest.records.size();

  for (BenchMode mode : modes) {
    std::unique_ptr<SampleSource> owned;
    if (mode == BenchMode::kDisk) {
      owned = std::make_unique<DiskSource>(manifest);
    } else {
      owned = std::make_unique<SampleCache>(prefetch_all(manifest));
    }
    for (int grid : grid_sizes) {
      BenchRow row;
      row.mode = mode;
      row.grid_size = grid;
      for (std::size_t rep = 0; rep < repetitions; ++rep) {
        ClutterSpec spec = base_spec;
        spec.grid_size = grid;
        spec.seed = derive_seed(seed, {static_cast<std::uint64_t>(grid),
                                       static_cast<std::uint64_t>(rep)});
        const SceneTimings t = synthesize_scene(registry, *owned, spec).timings;
        row.decode_ms += t.decode_ms;
        row.transfer_ms += t.transfer_ms;
        row.visibility_ms += t.visibility_ms;
        row.total_ms += t.total_ms;
      }
      const double n = static_cast<double>(repetitions);
      row.scenes = repetitions;
      row.decode_ms /= n;
      row.transfer_ms /= n;
      row.visibility_ms /= n;
      row.total_ms /= n;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace clutterlab
