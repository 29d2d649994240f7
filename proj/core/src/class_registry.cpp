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

#include "clutterlab/class_registry.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "clutterlab/dataset_io.hpp"

namespace clutterlab {

using nlohmann::json;

ClassId ClassRegistry::add(std::string name) {
  const int next = entries_.empty() ? 1 : entries_.back().id + 1;
  if (next > std::numeric_limits<ClassId>::max()) {
    throw ValidationError("class id space exhausted");
  }
  insert(static_cast<ClassId>(next), std::move(name));
  return static_cast<ClassId>(next);
}

void ClassRegistry::insert(ClassId id, std::string name,
                           std::size_t image_count) {
  if (id == 0) throw ValidationError("class id 0 is reserved for background");
  if (name.empty()) throw ValidationError("class name must not be empty");
  if (find(id) != nullptr) {
    throw ValidationError("duplicate class id " + std::to_string(id));
  }
  if (find(name) != nullptr) {
    throw ValidationError("duplicate class name '" + name + "'");
  }
  auto pos = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const ClassEntry& e, ClassId v) { return e.id < v; });
  entries_.insert(pos, ClassEntry{id, std::move(name), image_count});
}

void ClassRegistry::set_image_count(ClassId id, std::size_t count) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const ClassEntry& e) { return e.id == id; });
  if (it == entries_.end()) {
    throw ValidationError("unknown class id " + std::to_string(id));
  }
  it->image_count = count;
}

const ClassEntry* ClassRegistry::find(ClassId id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const ClassEntry& e, ClassId v) { return e.id < v; });
  return it != entries_.end() && it->id == id ? &*it : nullptr;
}

const ClassEntry* ClassRegistry::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const ClassEntry& e) { return e.name == name; });
  return it != entries_.end() ? &*it : nullptr;
}

const ClassEntry& ClassRegistry::at(ClassId id) const {
  const ClassEntry* entry = find(id);
  if (entry == nullptr) {
    throw ValidationError("unregistered class id " + std::to_string(id));
  }
  return *entry;
}

std::string ClassRegistry::to_json() const {
  json classes = json::array();
  for (const ClassEntry& e : entries_) {
    classes.push_back({{"id", e.id}, {"name", e.name}});
  }
  return json{{"classes", classes}}.dump(2) + "\n";
}

ClassRegistry ClassRegistry::from_json(std::string_view text) {
  ClassRegistry registry;
  json doc;
  try {
    doc = json::parse(text);
    for (const json& e : doc.at("classes")) {
      const int id = e.at("id").get<int>();
      if (id <= 0 || id > std::numeric_limits<ClassId>::max()) {
        throw ValidationError("class id out of range: " + std::to_string(id));
      }
      registry.insert(static_cast<ClassId>(id), e.at("name").get<std::string>());
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed class registry: ") +
                          ex.what());
  }
  return registry;
}

void ClassRegistry::save(const std::filesystem::path& file) const {
  write_file_atomic(file, to_json());
}

ClassRegistry ClassRegistry::load(const std::filesystem::path& file) {
  const std::string text = read_file_text(file);
  try {
    return from_json(text);
  } catch (const ValidationError& ex) {
    throw IoError(file, ex.what());
  }
}

}  // namespace clutterlab
