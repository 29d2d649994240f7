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

#include "clutterlab/sample_cache.hpp"

#include <unistd.h>

#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace clutterlab {

namespace fs = std::filesystem;

void SampleIndex::add(const ManifestRecord& record) {
  if (record.source == Provenance::kSynthesized) return;
  if (record.class_ids.empty()) {
    backgrounds.push_back(record.id);
  } else if (record.class_ids.size() == 1) {
    by_class[record.class_ids.front()].push_back(record.id);
    single_instance.push_back(record.id);
  }
}

SampleIndex SampleIndex::from_records(
    const std::vector<ManifestRecord>& records) {
  SampleIndex index;
  for (const ManifestRecord& r : records) index.add(r);
  return index;
}

std::size_t SampleIndex::image_count(ClassId id) const {
  auto it = by_class.find(id);
  return it == by_class.end() ? 0 : it->second.size();
}

namespace {

ManifestRecord record_for(const AnnotatedSample& sample) {
  ManifestRecord r;
  r.id = sample.id;
  r.class_ids = present_ids(sample.labels);
  r.source = sample.source;
  r.seed = sample.seed;
  return r;
}

}  // namespace

SampleCache::SampleCache(std::vector<AnnotatedSample> samples) {
  for (AnnotatedSample& s : samples) {
    const ManifestRecord record = record_for(s);
    insert(std::make_shared<const AnnotatedSample>(std::move(s)), record);
  }
}

void SampleCache::insert(SamplePtr sample, const ManifestRecord& record) {
  if (sample->id.empty()) throw ValidationError("cached sample has no id");
  if (!samples_.emplace(sample->id, sample).second) {
    throw ValidationError("duplicate sample id '" + sample->id + "'");
  }
  order_.push_back(sample->id);
  index_.add(record);
  image_bytes_ += sample->image.byte_size();
  label_bytes_ += sample->labels.byte_size();
}

SamplePtr SampleCache::fetch(const std::string& id) const {
  auto it = samples_.find(id);
  if (it == samples_.end()) {
    throw ValidationError("sample '" + id + "' is not in the cache");
  }
  return it->second;
}

SampleCache SampleCache::with_sample(SamplePtr sample) const {
  SampleCache copy = *this;
  const ManifestRecord record = record_for(*sample);
  copy.insert(std::move(sample), record);
  return copy;
}

DiskSource::DiskSource(Manifest manifest) : manifest_(std::move(manifest)) {
  for (std::size_t i = 0; i < manifest_.records.size(); ++i) {
    position_.emplace(manifest_.records[i].id, i);
  }
  index_ = SampleIndex::from_records(manifest_.records);
}

SamplePtr DiskSource::fetch(const std::string& id) const {
  auto it = position_.find(id);
  if (it == position_.end()) {
    throw ValidationError("sample '" + id + "' is not in the manifest");
  }
  return std::make_shared<const AnnotatedSample>(
      load_sample(manifest_.records[it->second], manifest_.directory));
}

std::size_t default_memory_budget() {
  std::ifstream meminfo("/proc/meminfo");
  std::string key;
  std::size_t value = 0;
  std::string unit;
  while (meminfo >> key >> value >> unit) {
    if (key == "MemAvailable:") return value * 1024 / 4 * 3;
  }
  const long pages = sysconf(_SC_AVPHYS_PAGES);
  const long page_size = sysconf(_SC_PAGESIZE);
  if (pages > 0 && page_size > 0) {
    return static_cast<std::size_t>(pages) *
           static_cast<std::size_t>(page_size) / 4 * 3;
  }
  return 0;
}

namespace {

// Width and height from the IHDR chunk, which must directly follow the
// signature in a valid PNG.
std::pair<std::size_t, std::size_t> png_dims(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(file, "cannot open for reading");
  std::array<unsigned char, 24> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  static constexpr std::array<unsigned char, 8> kSig = {0x89, 'P',  'N',  'G',
                                                       '\r', '\n', 0x1a, '\n'};
  if (!in || !std::equal(kSig.begin(), kSig.end(), head.begin()) ||
      head[12] != 'I' || head[13] != 'H' || head[14] != 'D' || head[15] != 'R') {
    throw IoError(file, "not a PNG file");
  }
  auto be32 = [&](std::size_t at) {
    return (std::size_t{head[at]} << 24) | (std::size_t{head[at + 1]} << 16) |
           (std::size_t{head[at + 2]} << 8) | std::size_t{head[at + 3]};
  };
  return {be32(16), be32(20)};
}

}  // namespace

std::size_t required_decoded_bytes(const Manifest& manifest) {
  std::size_t total = 0;
  for (const ManifestRecord& r : manifest.records) {
    auto [w, h] = png_dims(manifest.directory / r.image);
    auto [lw, lh] = png_dims(manifest.directory / r.labels);
    total += w * h * 3 + lw * lh * 2;
  }
  return total;
}

SampleCache prefetch_all(const Manifest& manifest,
                         std::optional<std::size_t> budget_bytes) {
  SampleCache cache;
  if (manifest.records.empty()) return cache;
  const std::size_t budget = budget_bytes ? *budget_bytes
                                          : default_memory_budget();
  const std::size_t required = required_decoded_bytes(manifest);
  if (required > budget) throw MemoryBudgetError(required, budget);
  for (const ManifestRecord& r : manifest.records) {
    cache.insert(std::make_shared<const AnnotatedSample>(
                     load_sample(r, manifest.directory)),
                 r);
  }
  return cache;
}

ClassRegistry load_registry(const Manifest& manifest) {
  const SampleIndex index = SampleIndex::from_records(manifest.records);
  ClassRegistry registry;
  const fs::path classes = manifest.directory / kClassesFile;
  std::error_code ec;
  if (fs::exists(classes, ec)) {
    registry = ClassRegistry::load(classes);
  } else {
    std::set<ClassId> ids;
    for (const ManifestRecord& r : manifest.records) {
      ids.insert(r.class_ids.begin(), r.class_ids.end());
    }
    for (ClassId id : ids) registry.insert(id, "class_" + std::to_string(id));
  }
  for (const ClassEntry& e : std::vector<ClassEntry>(registry.entries())) {
    registry.set_image_count(e.id, index.image_count(e.id));
  }
  return registry;
}

}  // namespace clutterlab
