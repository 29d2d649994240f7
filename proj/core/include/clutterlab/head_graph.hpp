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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clutterlab/error.hpp"

namespace clutterlab {

// Shape-level model of the child network's segmentation head on a
// ResNet-50 backbone. Nothing here executes tensors; the graph exists to
// check wiring, infer feature sizes and count parameters.

enum class NodeKind {
  kBackboneStage,
  kSmoothing,      // 1x1 conv + batch norm + ReLU
  kInterpolation,  // parameter-free 2x bilinear upsample
  kMergeAdd,       // element-wise sum
  kConcat,         // channel concatenation (context extraction)
};

std::string_view to_string(NodeKind kind);

struct HeadNode {
  NodeKind kind = NodeKind::kSmoothing;
  std::string id;
  std::vector<std::string> inputs;
  std::int64_t out_channels = 0;  // configured width for smoothing blocks
  int scale = 0;                  // spatial stride relative to the input
};

struct BackboneStage {
  std::string name;
  std::int64_t channels;
  int scale;
};

// conv2_3 (256, /4), conv3_4 (512, /8), conv4_6 (1024, /16),
// conv5_3 (2048, /32).
const std::vector<BackboneStage>& resnet50_stages();

class HeadGraphError : public ValidationError {
 public:
  HeadGraphError(std::string node, const std::string& what)
      : ValidationError("node '" + node + "': " + what),
        node_(std::move(node)) {}

  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class HeadGraph {
 public:
  void add(HeadNode node);

  // Removes a single-input node, rewiring its consumers to its input.
  void bypass(std::string_view id);

  const std::vector<HeadNode>& nodes() const noexcept { return nodes_; }
  const HeadNode& node(std::string_view id) const;
  bool contains(std::string_view id) const;

  // Nodes that feed no other node.
  std::vector<std::string> sinks() const;
  const HeadNode& output() const;

  // Inputs before consumers; throws HeadGraphError on a cycle or a dangling
  // input.
  std::vector<std::string> topological_order() const;

  // Recomputes derived channel and scale metadata in topological order and
  // checks block rules. Throws HeadGraphError naming the offending node.
  void validate();

  std::string to_json() const;

 private:
  std::vector<HeadNode> nodes_;
  std::map<std::string, std::size_t, std::less<>> position_;
};

// Top-down cascade with lateral projections, four context branches
// upsampled to /4, concatenated and smoothed to `output_width` (defaults to
// `width`).
HeadGraph build_head(std::int64_t width, std::int64_t output_width = 0);

struct FeatureShape {
  int height = 0;
  int width = 0;
  std::int64_t channels = 0;

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

// Backbone stages at floor(size / stride), interpolation doubles spatial
// dims. Element-wise merges need equal channels and sizes; concatenation
// needs equal sizes. Throws HeadGraphError naming the node.
std::map<std::string, FeatureShape> infer_shapes(const HeadGraph& graph,
                                                 int height, int width);

// Smoothing block in->out: in*out + out (conv) + 2*out (norm affine).
// Every other block is parameter-free.
std::int64_t smoothing_params(std::int64_t in, std::int64_t out);
std::int64_t param_count(const HeadGraph& graph);

// Shape table as aligned text, in topological order.
std::string shape_table(const HeadGraph& graph,
                        const std::map<std::string, FeatureShape>& shapes);

std::string shapes_to_json(const HeadGraph& graph,
                           const std::map<std::string, FeatureShape>& shapes);

}  // namespace clutterlab
