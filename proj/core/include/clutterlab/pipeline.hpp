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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"
#include "clutterlab/fusion.hpp"
#include "clutterlab/predictors.hpp"
#include "clutterlab/rng.hpp"
#include "clutterlab/sample_cache.hpp"
#include "clutterlab/synthesis.hpp"

namespace clutterlab {

// Multi-producer multi-consumer FIFO with a hard capacity. push() blocks
// while full and pop() blocks while empty; after close() pushes fail and
// pops drain what is left, then return nullopt.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("queue capacity must be >= 1");
  }

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    ++pushed_;
    if (items_.size() > max_depth_) max_depth_ = items_.size();
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    return take(lock);
  }

  std::optional<T> try_pop() {
    std::unique_lock lock(mu_);
    return take(lock);
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t max_depth() const {
    std::lock_guard lock(mu_);
    return max_depth_;
  }
  std::size_t pushed() const {
    std::lock_guard lock(mu_);
    return pushed_;
  }
  std::size_t popped() const {
    std::lock_guard lock(mu_);
    return popped_;
  }

 private:
  std::optional<T> take(std::unique_lock<std::mutex>&) {
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    ++popped_;
    not_full_.notify_one();
    return item;
  }

  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
  std::size_t max_depth_ = 0;
  std::size_t pushed_ = 0;
  std::size_t popped_ = 0;
};

// Chooses between a single-instance image and a synthesized scene for each
// delivery to the child.
class FeedSelector {
 public:
  FeedSelector(std::uint64_t seed, double single_probability = 0.25);

  bool next_is_single() { return rng_.bernoulli(p_single_); }
  double single_probability() const noexcept { return p_single_; }

 private:
  Rng rng_;
  double p_single_;
};

struct PipelineConfig {
  // Directory replayed by acquisition; empty selects the fixture generator.
  std::string source_dir;
  int fixture_classes = 10;
  int images_per_revolution = 60;

  std::string mask_predictor = "chroma_oracle";
  std::string box_predictor = "connected_components";
  FusionPolicy labeling_policy{};
  int labeling_workers = 1;

  int clutter_workers = 24;
  ClutterSpec clutter{};
  std::vector<int> grid_sizes{3, 4, 5};
  std::size_t queue_capacity = 64;

  // single : multi
  int single_weight = 1;
  int multi_weight = 3;

  bool prefetch = true;
  bool consume_once = true;
  std::uint64_t seed = 0;
  // Bound on synthesized scenes; unset means synthesis continues until the
  // replay finishes (or indefinitely with hold_acquisition_open).
  std::optional<std::size_t> max_scenes;

  bool paced = false;
  double images_per_minute = 360.0;
  double child_service_ms = 0.0;

  // Keep acquisition waiting for injected items until close_acquisition().
  bool hold_acquisition_open = false;
  // Run every stage on the calling thread in a fixed order.
  bool serial = false;

  double single_probability() const {
    return static_cast<double>(single_weight) / (single_weight + multi_weight);
  }

  void validate() const;
  std::string to_json() const;
  static PipelineConfig from_json(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& file);
};

// One physical item on the turntable: a name plus lazily produced images.
struct AcquisitionItem {
  std::string name;
  std::vector<std::function<RgbImage()>> images;
};

// One revolution per class of the single-instance samples in `manifest`.
std::vector<AcquisitionItem> replay_items(const Manifest& manifest,
                                          int images_per_revolution,
                                          bool prefetch);

std::vector<AcquisitionItem> fixture_items(int classes,
                                           int images_per_revolution,
                                           std::uint64_t seed);

struct StageStats {
  std::string name;
  std::size_t processed = 0;
  double mean_latency_ms = 0.0;
  double throughput_per_s = 0.0;
  std::size_t queue_depth = 0;  // of the stage's input queue at the end
  std::size_t max_queue_depth = 0;
  std::size_t queue_capacity = 0;
  std::size_t defects = 0;
};

struct SceneTimingSummary {
  int grid_size = 0;
  std::size_t scenes = 0;
  double decode_ms = 0.0;
  double transfer_ms = 0.0;
  double visibility_ms = 0.0;
  double total_ms = 0.0;
};

// Quiescent-point conservation: acquired = labeled + label_dropped and
// synthesized = delivered + discarded.
struct FlowCounters {
  std::size_t acquired = 0;
  std::size_t labeled = 0;
  std::size_t label_dropped = 0;
  std::size_t scenes_synthesized = 0;
  std::size_t scenes_delivered = 0;
  std::size_t scenes_discarded = 0;
  std::size_t scene_redeliveries = 0;
  std::size_t singles_delivered = 0;
};

struct StageMetrics {
  std::vector<StageStats> stages;  // acquisition, labeling, clutter, feed
  std::vector<SceneTimingSummary> scene_timings;
  FlowCounters flow;
  ConsumerMetrics child;
  double elapsed_s = 0.0;

  const StageStats& stage(std::string_view name) const;
  std::string to_json() const;
  std::string to_table() const;
};

struct SceneRecord {
  std::string id;
  int worker = 0;
  std::uint64_t counter = 0;
  int grid_size = 0;
  // Ground-truth count visible to the planner when the scene was drawn.
  std::uint64_t store_version = 0;
  std::vector<ClassId> classes;  // present in the final labels
  SceneTimings timings;
};

struct PipelineReport {
  StageMetrics metrics;
  std::vector<SceneRecord> scenes;  // in completion order
  ClassRegistry registry;
  // Store version at which each class received its first ground truth.
  std::map<ClassId, std::uint64_t> first_ground_truth;
};

class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what)
      : Error(kind, "stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::vector<AcquisitionItem> items,
           const MaskPredictor& mask, const BoxPredictor& box,
           ChildConsumer& child);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Runs to completion; may be called once. Rethrows the first stage
  // failure as StageError after every stage has stopped.
  PipelineReport run();

  // Acquisition halts at once; the remaining stages drain. Safe from any
  // thread, any number of times.
  void request_stop();

  // Watched alongside request_stop(), e.g. a flag set by a signal handler.
  void set_external_stop(const std::atomic<bool>* flag) { external_stop_ = flag; }

  // New class id. Planners see it only once it has a ground truth.
  ClassId register_item(std::string name);

  // Registers the item and queues its images for acquisition.
  ClassId add_item(AcquisitionItem item);

  void close_acquisition();

  // Called after each synthesized scene, from the producing worker.
  void on_scene(std::function<void(const SceneRecord&)> callback);

 private:
  struct State;
  std::unique_ptr<State> state_;
  const std::atomic<bool>* external_stop_ = nullptr;
};

// Builds the acquisition source from the config and runs to the end.
PipelineReport run_pipeline(const PipelineConfig& config,
                            const MaskPredictor& mask, const BoxPredictor& box,
                            ChildConsumer& child,
                            const std::atomic<bool>* stop = nullptr);

// Synthesizes `count` scenes with per-scene seeds derive_seed(seed, {i}) on
// `workers` threads. Output order is by scene index, so the result does not
// depend on the worker count.
std::vector<SynthesisResult> synthesize_batch(const ClassRegistry& registry,
                                              const SampleSource& source,
                                              const ClutterSpec& spec,
                                              std::size_t count, int workers,
                                              std::uint64_t seed);

// Scenes per second for synthesize_batch with the given worker count.
double measure_clutter_throughput(const ClassRegistry& registry,
                                  const SampleSource& source,
                                  const ClutterSpec& spec, std::size_t scenes,
                                  int workers, std::uint64_t seed);

enum class BenchMode { kDisk, kRam };
std::string_view to_string(BenchMode mode);

struct BenchRow {
  BenchMode mode = BenchMode::kDisk;
  int grid_size = 0;
  std::size_t scenes = 0;
  double decode_ms = 0.0;
  double transfer_ms = 0.0;
  double visibility_ms = 0.0;
  double total_ms = 0.0;
};

struct BenchReport {
  std::size_t corpus_images = 0;
  std::vector<BenchRow> rows;

  const BenchRow& row(BenchMode mode, int grid_size) const;
  std::string to_json() const;
  std::string to_table() const;
};

// Mean per-scene timings for each grid size, reading every image from disk
// and from a prefetched cache. Both modes draw the same scenes.
BenchReport bench_clutter(const Manifest& manifest,
                          const std::vector<int>& grid_sizes,
                          std::size_t repetitions,
                          const std::vector<BenchMode>& modes,
                          const ClutterSpec& base_spec, std::uint64_t seed);

}  // namespace clutterlab
