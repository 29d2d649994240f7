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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/raster.hpp"

namespace clutterlab {

struct ClassEntry {
  ClassId id = 0;
  std::string name;
  std::size_t image_count = 0;

  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

// Set of known item classes. Ids are nonzero and unique, names unique.
class ClassRegistry {
 public:
  ClassRegistry() = default;

  // Allocates the next free id (max + 1). Throws ValidationError on a
  // duplicate or empty name, or when the 16-bit id space is exhausted.
  ClassId add(std::string name);

  // Inserts with an explicit id, e.g. when loading classes.json.
  void insert(ClassId id, std::string name, std::size_t image_count = 0);

  void set_image_count(ClassId id, std::size_t count);

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<ClassEntry>& entries() const noexcept { return entries_; }

  bool contains(ClassId id) const { return find(id) != nullptr; }
  const ClassEntry* find(ClassId id) const;
  const ClassEntry* find(std::string_view name) const;

  // Throws ValidationError for an unknown id.
  const ClassEntry& at(ClassId id) const;

  std::string to_json() const;
  static ClassRegistry from_json(std::string_view text);

  // classes.json: {"classes":[{"id":1,"name":"bottle"}, ...]}
  void save(const std::filesystem::path& file) const;
  static ClassRegistry load(const std::filesystem::path& file);

  friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

 private:
  std::vector<ClassEntry> entries_;  // sorted by id
};

}  // namespace clutterlab
