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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/raster.hpp"

namespace clutterlab {

enum class Provenance { kAcquired, kSynthesized, kFixture };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct BoxRecord {
  ClassId class_id = 0;
  Box box;

  friend bool operator==(const BoxRecord&, const BoxRecord&) = default;
};

// The unit exchanged between pipeline stages and persisted on disk.
struct AnnotatedSample {
  std::string id;
  RgbImage image;
  LabelMap labels;
  std::vector<BoxRecord> boxes;
  Provenance source = Provenance::kFixture;
  std::optional<std::uint64_t> seed;

  std::size_t decoded_bytes() const noexcept {
    return image.byte_size() + labels.byte_size();
  }

  friend bool operator==(const AnnotatedSample&,
                         const AnnotatedSample&) = default;
};

// First invariant violation found, or nullopt for a well-formed sample.
std::optional<std::string> find_sample_defect(const AnnotatedSample& sample);

// Throws ValidationError carrying the defect description.
void validate_sample(const AnnotatedSample& sample);

// One line of manifest.jsonl. Paths are relative to the dataset directory.
struct ManifestRecord {
  std::string id;
  std::string image;
  std::string labels;
  std::string boxes;
  std::vector<ClassId> class_ids;
  Provenance source = Provenance::kFixture;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const ManifestRecord&,
                         const ManifestRecord&) = default;
};

std::string to_json_line(const ManifestRecord& record);
ManifestRecord manifest_record_from_json(std::string_view line);

struct Manifest {
  std::filesystem::path directory;
  std::vector<ManifestRecord> records;

  // Reads `<directory>/manifest.jsonl`, or the named file if `path` is a
  // regular file. A missing manifest in an existing directory is empty.
  static Manifest load(const std::filesystem::path& path);

  const ManifestRecord* find(std::string_view id) const;
};

inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kClassesFile = "classes.json";

// Serialized box line: {"class_id":1,"x_min":0,"y_min":0,"x_max":4,"y_max":4}
std::string to_json_line(const BoxRecord& record);
std::vector<BoxRecord> parse_box_lines(std::string_view text,
                                       const std::filesystem::path& origin);

// Appends samples to a dataset directory. Single writer per directory.
class DatasetWriter {
 public:
  explicit DatasetWriter(std::filesystem::path directory);

  // Writes <id>.rgb.png, <id>.labels.png, <id>.boxes.jsonl and appends the
  // manifest line. Uses sample.id when set, otherwise allocates the next
  // sequential id. Returns the id.
  std::string save(const AnnotatedSample& sample);

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  std::string next_id();

  std::filesystem::path dir_;
  std::vector<std::string> known_ids_;
  std::size_t next_index_ = 0;
};

std::string save_sample(const AnnotatedSample& sample,
                        const std::filesystem::path& directory);

AnnotatedSample load_sample(std::string_view id,
                            const std::filesystem::path& directory);
AnnotatedSample load_sample(const ManifestRecord& record,
                            const std::filesystem::path& directory);

// PNG helpers shared with the CLI.
RgbImage read_rgb_png(const std::filesystem::path& file);
LabelMap read_label_png(const std::filesystem::path& file);
void write_rgb_png(const RgbImage& image, const std::filesystem::path& file);
void write_label_png(const LabelMap& labels, const std::filesystem::path& file);

// Writes to a sibling temporary file and renames over the target, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& file,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& file,
                       std::string_view text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& file);
std::string read_file_text(const std::filesystem::path& file);

}  // namespace clutterlab
