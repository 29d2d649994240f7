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

#include "clutterlab/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "png_codec.hpp"

namespace clutterlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kAcquired:
      return "acquired";
    case Provenance::kSynthesized:
      return "synthesized";
    case Provenance::kFixture:
      return "fixture";
  }
  return "fixture";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "acquired") return Provenance::kAcquired;
  if (s == "synthesized") return Provenance::kSynthesized;
  if (s == "fixture") return Provenance::kFixture;
  throw ValidationError("unknown provenance '" + std::string(s) + "'");
}

std::optional<std::string> find_sample_defect(const AnnotatedSample& sample) {
  const RgbImage& image = sample.image;
  if (image.empty()) return "sample has no image";
  if (!image.same_dims(sample.labels)) {
    return "label map " + std::to_string(sample.labels.width()) + "x" +
           std::to_string(sample.labels.height()) +
           " does not match image " + std::to_string(image.width()) + "x" +
           std::to_string(image.height());
  }
  for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
    const BoxRecord& rec = sample.boxes[i];
    if (rec.class_id == 0) {
      return "box " + std::to_string(i) + " has background class id";
    }
    if (!rec.box.fits_within(image.width(), image.height())) {
      return "box " + std::to_string(i) + " " + to_string(rec.box) +
             " lies outside the " + std::to_string(image.width()) + "x" +
             std::to_string(image.height()) + " image";
    }
    bool found = false;
    for (int y = rec.box.y_min; y < rec.box.y_max && !found; ++y) {
      for (int x = rec.box.x_min; x < rec.box.x_max; ++x) {
        if (sample.labels.at(x, y) == rec.class_id) {
          found = true;
          break;
        }
      }
    }
    if (!found) {
      return "box " + std::to_string(i) + " class " +
             std::to_string(rec.class_id) +
             " does not appear in the labels inside the box";
    }
  }
  return std::nullopt;
}

void validate_sample(const AnnotatedSample& sample) {
  if (auto defect = find_sample_defect(sample)) throw ValidationError(*defect);
}

// ---------------------------------------------------------------------------
// JSON records

std::string to_json_line(const BoxRecord& record) {
  json j = {{"class_id", record.class_id},
            {"x_min", record.box.x_min},
            {"y_min", record.box.y_min},
            {"x_max", record.box.x_max},
            {"y_max", record.box.y_max}};
  return j.dump();
}

std::vector<BoxRecord> parse_box_lines(std::string_view text,
                                       const fs::path& origin) {
  std::vector<BoxRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      const int id = j.at("class_id").get<int>();
      if (id <= 0 || id > 0xffff) throw ValidationError("class_id out of range");
      BoxRecord rec{static_cast<ClassId>(id),
                    Box{j.at("x_min").get<int>(), j.at("y_min").get<int>(),
                        j.at("x_max").get<int>(), j.at("y_max").get<int>()}};
      if (!rec.box.is_valid()) throw ValidationError("degenerate box");
      out.push_back(rec);
    } catch (const json::exception& ex) {
      throw MalformedRecordError(origin, line_no, ex.what());
    } catch (const ValidationError& ex) {
      throw MalformedRecordError(origin, line_no, ex.what());
    }
  }
  return out;
}

std::string to_json_line(const ManifestRecord& r) {
  json j = {{"id", r.id},           {"image", r.image},
            {"labels", r.labels},   {"boxes", r.boxes},
            {"class_ids", r.class_ids}, {"source", to_string(r.source)}};
  if (r.seed) j["seed"] = *r.seed;
  return j.dump();
}

ManifestRecord manifest_record_from_json(std::string_view line) try {
  const json j = json::parse(line);
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  r.image = j.value("image", r.id + ".rgb.png");
  r.labels = j.value("labels", r.id + ".labels.png");
  r.boxes = j.value("boxes", r.id + ".boxes.jsonl");
  if (j.contains("class_ids")) {
    r.class_ids = j.at("class_ids").get<std::vector<ClassId>>();
  }
  r.source = provenance_from_string(j.value("source", "fixture"));
  if (j.contains("seed") && !j.at("seed").is_null()) {
    r.seed = j.at("seed").get<std::uint64_t>();
  }
  return r;
} catch (const json::exception& e) {
  throw ValidationError(std::string("bad manifest record: ") + e.what());
}

Manifest Manifest::load(const fs::path& path) {
  Manifest manifest;
  fs::path file = path;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    manifest.directory = path;
    file = path / kManifestFile;
    if (!fs::exists(file, ec)) return manifest;
  } else {
    manifest.directory = path.parent_path();
    if (manifest.directory.empty()) manifest.directory = ".";
  }
  const std::string text = read_file_text(file);
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      manifest.records.push_back(manifest_record_from_json(line));
    } catch (const json::exception& ex) {
      throw MalformedRecordError(file, line_no, ex.what());
    } catch (const ValidationError& ex) {
      throw MalformedRecordError(file, line_no, ex.what());
    }
  }
  return manifest;
}

const ManifestRecord* Manifest::find(std::string_view id) const {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const ManifestRecord& r) { return r.id == id; });
  return it != records.end() ? &*it : nullptr;
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path& file,
                       std::span<const std::uint8_t> bytes) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(file, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(file, "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(file, "rename failed: " + ec.message());
  }
}

void write_file_atomic(const fs::path& file, std::string_view text) {
  write_file_atomic(
      file, std::span<const std::uint8_t>(
                reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(file, "cannot open for reading");
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError(file, "read failed");
  return bytes;
}

std::string read_file_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(file, "cannot open for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

RgbImage read_rgb_png(const fs::path& file) {
  return png::decode_rgb8(read_file_bytes(file), file);
}

LabelMap read_label_png(const fs::path& file) {
  return png::decode_gray16(read_file_bytes(file), file);
}

void write_rgb_png(const RgbImage& image, const fs::path& file) {
  write_file_atomic(file, png::encode_rgb8(image));
}

void write_label_png(const LabelMap& labels, const fs::path& file) {
  write_file_atomic(file, png::encode_gray16(labels));
}

// ---------------------------------------------------------------------------
// Samples

namespace {

bool is_safe_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

std::string format_index(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

}  // namespace

DatasetWriter::DatasetWriter(fs::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError(dir_, "cannot create directory: " + ec.message());
  Manifest existing = Manifest::load(dir_);
  for (const ManifestRecord& r : existing.records) known_ids_.push_back(r.id);
  std::sort(known_ids_.begin(), known_ids_.end());
  next_index_ = existing.records.size();
}

std::string DatasetWriter::next_id() {
  std::string id;
  do {
    id = format_index(next_index_++);
  } while (std::binary_search(known_ids_.begin(), known_ids_.end(), id));
  return id;
}

std::string DatasetWriter::save(const AnnotatedSample& sample) {
  validate_sample(sample);
  std::string id = sample.id.empty() ? next_id() : sample.id;
  if (!is_safe_id(id)) {
    throw ValidationError("sample id '" + id +
                          "' must be alphanumeric, '-' or '_'");
  }
  if (std::binary_search(known_ids_.begin(), known_ids_.end(), id)) {
    throw ValidationError("sample id '" + id + "' already exists in " +
                          dir_.string());
  }

  ManifestRecord record;
  record.id = id;
  record.image = id + ".rgb.png";
  record.labels = id + ".labels.png";
  record.boxes = id + ".boxes.jsonl";
  record.class_ids = present_ids(sample.labels);
  record.source = sample.source;
  record.seed = sample.seed;

  write_rgb_png(sample.image, dir_ / record.image);
  write_label_png(sample.labels, dir_ / record.labels);
  std::string box_text;
  for (const BoxRecord& b : sample.boxes) box_text += to_json_line(b) + "\n";
  write_file_atomic(dir_ / record.boxes, box_text);

  // The manifest line goes last so it never names a missing file.
  const fs::path manifest = dir_ / kManifestFile;
  std::ofstream out(manifest, std::ios::app | std::ios::binary);
  if (!out) throw IoError(manifest, "cannot open for append");
  out << to_json_line(record) << '\n';
  out.flush();
  if (!out) throw IoError(manifest, "append failed");

  known_ids_.insert(
      std::upper_bound(known_ids_.begin(), known_ids_.end(), id), id);
  return id;
}

std::string save_sample(const AnnotatedSample& sample, const fs::path& dir) {
  DatasetWriter writer(dir);
  return writer.save(sample);
}

AnnotatedSample load_sample(const ManifestRecord& record, const fs::path& dir) {
  AnnotatedSample sample;
  sample.id = record.id;
  sample.image = read_rgb_png(dir / record.image);
  sample.labels = read_label_png(dir / record.labels);
  const fs::path boxes = dir / record.boxes;
  sample.boxes = parse_box_lines(read_file_text(boxes), boxes);
  sample.source = record.source;
  sample.seed = record.seed;
  if (auto defect = find_sample_defect(sample)) {
    throw IoError(dir / record.image, "inconsistent sample: " + *defect);
  }
  return sample;
}

AnnotatedSample load_sample(std::string_view id, const fs::path& dir) {
  const Manifest manifest = Manifest::load(dir);
  const ManifestRecord* record = manifest.find(id);
  if (record == nullptr) {
    throw IoError(dir / kManifestFile,
                  "no sample with id '" + std::string(id) + "'");
  }
  return load_sample(*record, dir);
}

}  // namespace clutterlab
