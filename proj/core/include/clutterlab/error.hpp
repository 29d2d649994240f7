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
#include <stdexcept>
#include <string>

namespace clutterlab {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind { kValidation, kIo, kInternal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Input violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

// Filesystem failure, or a file whose contents cannot be decoded.
class IoError : public Error {
 public:
  IoError(std::filesystem::path path, const std::string& what)
      : Error(ErrorKind::kIo, path.string() + ": " + what),
        path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

class MalformedRecordError : public IoError {
 public:
  MalformedRecordError(std::filesystem::path path, std::size_t line,
                       const std::string& what)
      : IoError(std::move(path),
                "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BitDepthError : public IoError {
 public:
  BitDepthError(std::filesystem::path path, int expected, int actual)
      : IoError(std::move(path), "expected " + std::to_string(expected) +
                                     "-bit samples, found " +
                                     std::to_string(actual) + "-bit"),
        expected_(expected),
        actual_(actual) {}

  int expected() const noexcept { return expected_; }
  int actual() const noexcept { return actual_; }

 private:
  int expected_;
  int actual_;
};

class MemoryBudgetError : public Error {
 public:
  MemoryBudgetError(std::size_t required, std::size_t available)
      : Error(ErrorKind::kValidation,
              "memory budget exceeded: required " + std::to_string(required) +
                  " bytes, available " + std::to_string(available)),
        required_(required),
        available_(available) {}

  std::size_t required() const noexcept { return required_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t required_;
  std::size_t available_;
};

class EmptyMaskError : public ValidationError {
 public:
  EmptyMaskError() : ValidationError("mask has no foreground pixels") {}
};

class EmptyFusionError : public ValidationError {
 public:
  explicit EmptyFusionError(const std::string& what)
      : ValidationError("empty fusion: " + what) {}
};

}  // namespace clutterlab
