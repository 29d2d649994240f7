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

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clutterlab/class_registry.hpp"
#include "clutterlab/dataset_io.hpp"

namespace clutterlab {

using SamplePtr = std::shared_ptr<const AnnotatedSample>;

// Which samples can serve as object sources or bases for clutter synthesis.
// Object sources are non-synthesized samples showing exactly one class.
struct SampleIndex {
  std::map<ClassId, std::vector<std::string>> by_class;
  std::vector<std::string> single_instance;  // base-image candidates
  std::vector<std::string> backgrounds;      // samples with empty labels

  void add(const ManifestRecord& record);
  static SampleIndex from_records(const std::vector<ManifestRecord>& records);

  std::size_t image_count(ClassId id) const;
};

// Read-only sample lookup used by synthesis. Implementations must be safe
// for concurrent fetches.
class SampleSource {
 public:
  virtual ~SampleSource() = default;

  // Throws ValidationError when the id is unknown.
  virtual SamplePtr fetch(const std::string& id) const = 0;

  virtual const SampleIndex& index() const = 0;
};

// Fully decoded, immutable set of samples.
class SampleCache final : public SampleSource {
 public:
  SampleCache() = default;

  // Takes ownership of already-decoded samples; ids must be unique.
  explicit SampleCache(std::vector<AnnotatedSample> samples);

  SamplePtr fetch(const std::string& id) const override;
  const SampleIndex& index() const override { return index_; }

  bool contains(const std::string& id) const {
    return samples_.count(id) != 0;
  }
  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<std::string>& ids() const noexcept { return order_; }

  std::size_t image_bytes() const noexcept { return image_bytes_; }
  std::size_t label_bytes() const noexcept { return label_bytes_; }
  std::size_t decoded_bytes() const noexcept {
    return image_bytes_ + label_bytes_;
  }

  // Copy sharing every existing sample plus `sample`.
  SampleCache with_sample(SamplePtr sample) const;

 private:
  friend SampleCache prefetch_all(const Manifest&, std::optional<std::size_t>);

  void insert(SamplePtr sample, const ManifestRecord& record);

  std::unordered_map<std::string, SamplePtr> samples_;
  std::vector<std::string> order_;
  SampleIndex index_;
  std::size_t image_bytes_ = 0;
  std::size_t label_bytes_ = 0;
};

// Decodes from disk on every fetch; the baseline for prefetch comparisons.
class DiskSource final : public SampleSource {
 public:
  explicit DiskSource(Manifest manifest);

  SamplePtr fetch(const std::string& id) const override;
  const SampleIndex& index() const override { return index_; }

 private:
  Manifest manifest_;
  std::unordered_map<std::string, std::size_t> position_;
  SampleIndex index_;
};

// 75% of the memory currently reported available by the OS.
std::size_t default_memory_budget();

// Decoded size of every sample in the manifest, read from PNG headers only.
std::size_t required_decoded_bytes(const Manifest& manifest);

// Decodes every sample into RAM. Throws MemoryBudgetError when the decoded
// size exceeds the budget (default_memory_budget() when unset).
SampleCache prefetch_all(const Manifest& manifest,
                         std::optional<std::size_t> budget_bytes = {});

// Registry for a dataset directory: classes.json names plus per-class image
// counts from the index.
ClassRegistry load_registry(const Manifest& manifest);

}  // namespace clutterlab
