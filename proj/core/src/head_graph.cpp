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

#include "clutterlab/head_graph.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

namespace clutterlab {

using nlohmann::json;

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kBackboneStage:
      return "backbone_stage";
    case NodeKind::kSmoothing:
      return "FSB";
    case NodeKind::kInterpolation:
      return "FIB";
    case NodeKind::kMergeAdd:
      return "MERGE_ADD";
    case NodeKind::kConcat:
      return "CEB";
  }
  return "FSB";
}

const std::vector<BackboneStage>& resnet50_stages() {
  static const std::vector<BackboneStage> stages = {
      {"conv2_3", 256, 4},
      {"conv3_4", 512, 8},
      {"conv4_6", 1024, 16},
      {"conv5_3", 2048, 32},
  };
  return stages;
}

void HeadGraph::add(HeadNode node) {
  if (node.id.empty()) throw ValidationError("head node needs an id");
  if (position_.count(node.id) != 0) {
    throw HeadGraphError(node.id, "duplicate node id");
  }
  position_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
}

const HeadNode& HeadGraph::node(std::string_view id) const {
  auto it = position_.find(id);
  if (it == position_.end()) {
    throw HeadGraphError(std::string(id), "no such node");
  }
  return nodes_[it->second];
}

bool HeadGraph::contains(std::string_view id) const {
  return position_.find(id) != position_.end();
}

void HeadGraph::bypass(std::string_view id) {
  const HeadNode& victim = node(id);
  if (victim.inputs.size() != 1) {
    throw HeadGraphError(victim.id, "only single-input nodes can be bypassed");
  }
  const std::string removed = victim.id;
  const std::string replacement = victim.inputs.front();
  std::vector<HeadNode> kept;
  for (HeadNode& n : nodes_) {
    if (n.id == removed) continue;
    for (std::string& in : n.inputs) {
      if (in == removed) in = replacement;
    }
    kept.push_back(std::move(n));
  }
  nodes_.clear();
  position_.clear();
  for (HeadNode& n : kept) add(std::move(n));
}

std::vector<std::string> HeadGraph::sinks() const {
  std::set<std::string, std::less<>> consumed;
  for (const HeadNode& n : nodes_) consumed.insert(n.inputs.begin(), n.inputs.end());
  std::vector<std::string> out;
  for (const HeadNode& n : nodes_) {
    if (consumed.count(n.id) == 0) out.push_back(n.id);
  }
  return out;
}

const HeadNode& HeadGraph::output() const {
  const std::vector<std::string> s = sinks();
  if (s.size() != 1) {
    throw HeadGraphError(s.empty() ? "<graph>" : s.front(),
                         "graph has " + std::to_string(s.size()) +
                             " output nodes, expected exactly one");
  }
  return node(s.front());
}

std::vector<std::string> HeadGraph::topological_order() const {
  // 0 = unvisited, 1 = on stack, 2 = done
  std::map<std::string, int, std::less<>> state;
  std::vector<std::string> order;
  std::function<void(const HeadNode&)> visit = [&](const HeadNode& n) {
    int& s = state[n.id];
    if (s == 2) return;
    if (s == 1) throw HeadGraphError(n.id, "cycle detected");
    s = 1;
    for (const std::string& in : n.inputs) {
      if (!contains(in)) throw HeadGraphError(n.id, "unknown input '" + in + "'");
      visit(node(in));
    }
    state[n.id] = 2;
    order.push_back(n.id);
  };
  for (const HeadNode& n : nodes_) visit(n);
  return order;
}

void HeadGraph::validate() {
  for (const std::string& id : topological_order()) {
    HeadNode& n = nodes_[position_.find(id)->second];
    auto input = [&](std::size_t i) -> const HeadNode& {
      return node(n.inputs[i]);
    };
    switch (n.kind) {
      case NodeKind::kBackboneStage:
        if (!n.inputs.empty()) throw HeadGraphError(n.id, "backbone stage has inputs");
        if (n.out_channels <= 0 || n.scale <= 0) {
          throw HeadGraphError(n.id, "backbone stage needs channels and scale");
        }
        break;
      case NodeKind::kSmoothing:
        if (n.inputs.size() != 1) throw HeadGraphError(n.id, "FSB takes one input");
        if (n.out_channels <= 0) throw HeadGraphError(n.id, "FSB width must be positive");
        n.scale = input(0).scale;
        break;
      case NodeKind::kInterpolation:
        if (n.inputs.size() != 1) throw HeadGraphError(n.id, "FIB takes one input");
        if (input(0).scale < 2 || input(0).scale % 2 != 0) {
          throw HeadGraphError(n.id, "cannot upsample beyond input resolution");
        }
        n.out_channels = input(0).out_channels;
        n.scale = input(0).scale / 2;
        break;
      case NodeKind::kMergeAdd:
      case NodeKind::kConcat: {
        if (n.inputs.size() < 2) {
          throw HeadGraphError(n.id, std::string(to_string(n.kind)) +
                                         " needs at least two inputs");
        }
        std::int64_t channels = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          const HeadNode& in = input(i);
          if (in.scale != input(0).scale) {
            throw HeadGraphError(
                n.id, "scale mismatch: '" + in.id + "' is /" +
                          std::to_string(in.scale) + " but '" + input(0).id +
                          "' is /" + std::to_string(input(0).scale));
          }
          if (n.kind == NodeKind::kMergeAdd &&
              in.out_channels != input(0).out_channels) {
            throw HeadGraphError(
                n.id, "channel mismatch: '" + in.id + "' has " +
                          std::to_string(in.out_channels) + " but '" +
                          input(0).id + "' has " +
                          std::to_string(input(0).out_channels));
          }
          channels += in.out_channels;
        }
        n.scale = input(0).scale;
        n.out_channels = n.kind == NodeKind::kConcat ? channels
                                                     : input(0).out_channels;
        break;
      }
    }
  }
}

std::string HeadGraph::to_json() const {
  json nodes = json::array();
  json edges = json::array();
  for (const HeadNode& n : nodes_) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"inputs", n.inputs},
                     {"out_channels", n.out_channels},
                     {"scale", n.scale}});
    for (const std::string& in : n.inputs) edges.push_back({in, n.id});
  }
  return json{{"nodes", nodes}, {"edges", edges}}.dump(2);
}

namespace {

HeadNode smoothing(std::string id, std::string input, std::int64_t width) {
  return HeadNode{NodeKind::kSmoothing, std::move(id), {std::move(input)},
                  width, 0};
}

HeadNode upsample(std::string id, std::string input) {
  return HeadNode{NodeKind::kInterpolation, std::move(id), {std::move(input)},
                  0, 0};
}

}  // namespace

HeadGraph build_head(std::int64_t width, std::int64_t output_width) {
  if (width < 1) throw ValidationError("projection width must be >= 1");
  if (output_width <= 0) output_width = width;
  HeadGraph g;
  for (const BackboneStage& s : resnet50_stages()) {
    g.add(HeadNode{NodeKind::kBackboneStage, s.name, {}, s.channels, s.scale});
  }

  // Top-down cascade.
  g.add(smoothing("td5_fsb", "conv5_3", width));
  g.add(upsample("td5_fib", "td5_fsb"));
  g.add(smoothing("lat4_fsb", "conv4_6", width));
  g.add(HeadNode{NodeKind::kMergeAdd, "td4_add", {"td5_fib", "lat4_fsb"}, 0, 0});
  g.add(smoothing("td4_fsb", "td4_add", width));
  g.add(upsample("td4_fib", "td4_fsb"));
  g.add(smoothing("lat3_fsb", "conv3_4", width));
  g.add(HeadNode{NodeKind::kMergeAdd, "td3_add", {"td4_fib", "lat3_fsb"}, 0, 0});
  g.add(smoothing("td3_fsb", "td3_add", width));
  g.add(upsample("td3_fib", "td3_fsb"));
  g.add(smoothing("lat2_fsb", "conv2_3", width));
  g.add(HeadNode{NodeKind::kMergeAdd, "td2_add", {"td3_fib", "lat2_fsb"}, 0, 0});
  g.add(smoothing("td2_fsb", "td2_add", width));

  // Context branches, each brought to /4.
  std::vector<std::string> concat_inputs = {"td2_fsb"};
  for (const BackboneStage& s : resnet50_stages()) {
    const std::string prefix = "ctx" + s.name.substr(4, 1);
    std::string last = prefix + "_fsb";
    g.add(smoothing(last, s.name, width));
    for (int scale = s.scale, k = 1; scale > 4; scale /= 2, ++k) {
      std::string up = prefix + "_fib" + std::to_string(k);
      g.add(upsample(up, last));
      last = std::move(up);
    }
    concat_inputs.push_back(last);
  }
  g.add(HeadNode{NodeKind::kConcat, "context_ceb", concat_inputs, 0, 0});
  g.add(smoothing("output_fsb", "context_ceb", output_width));
  g.validate();
  return g;
}

std::map<std::string, FeatureShape> infer_shapes(const HeadGraph& graph,
                                                 int height, int width) {
  if (height < 32 || width < 32) {
    throw ValidationError("input must be at least 32x32");
  }
  HeadGraph g = graph;
  g.validate();
  std::map<std::string, FeatureShape> shapes;
  for (const std::string& id : g.topological_order()) {
    const HeadNode& n = g.node(id);
    FeatureShape s;
    switch (n.kind) {
      case NodeKind::kBackboneStage:
        s = FeatureShape{height / n.scale, width / n.scale, n.out_channels};
        break;
      case NodeKind::kSmoothing:
        s = shapes.at(n.inputs[0]);
        s.channels = n.out_channels;
        break;
      case NodeKind::kInterpolation:
        s = shapes.at(n.inputs[0]);
        s.height *= 2;
        s.width *= 2;
        break;
      case NodeKind::kMergeAdd:
      case NodeKind::kConcat: {
        s = shapes.at(n.inputs[0]);
        s.channels = 0;
        for (const std::string& in : n.inputs) {
          const FeatureShape& f = shapes.at(in);
          if (f.height != s.height || f.width != s.width) {
            throw HeadGraphError(
                n.id, "spatial mismatch: '" + in + "' is " +
                          std::to_string(f.height) + "x" +
                          std::to_string(f.width) + ", expected " +
                          std::to_string(s.height) + "x" +
                          std::to_string(s.width));
          }
          s.channels += f.channels;
        }
        if (n.kind == NodeKind::kMergeAdd) s.channels = n.out_channels;
        break;
      }
    }
    shapes[id] = s;
  }
  return shapes;
}

std::int64_t smoothing_params(std::int64_t in, std::int64_t out) {
  return in * out + out + 2 * out;
}

std::int64_t param_count(const HeadGraph& graph) {
  HeadGraph g = graph;
  g.validate();
  std::int64_t total = 0;
  for (const HeadNode& n : g.nodes()) {
    if (n.kind != NodeKind::kSmoothing) continue;
    total += smoothing_params(g.node(n.inputs[0]).out_channels, n.out_channels);
  }
  return total;
}

std::string shape_table(const HeadGraph& graph,
                        const std::map<std::string, FeatureShape>& shapes) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %-15s %6s %6s %9s %6s\n", "node",
                "kind", "height", "width", "channels", "scale");
  out += line;
  HeadGraph g = graph;
  g.validate();
  for (const std::string& id : g.topological_order()) {
    const HeadNode& n = g.node(id);
    const FeatureShape& s = shapes.at(id);
    std::snprintf(line, sizeof(line), "%-14s %-15s %6d %6d %9lld %5s%d\n",
                  id.c_str(), std::string(to_string(n.kind)).c_str(), s.height,
                  s.width, static_cast<long long>(s.channels), "/", n.scale);
    out += line;
  }
  return out;
}

std::string shapes_to_json(const HeadGraph& graph,
                           const std::map<std::string, FeatureShape>& shapes) {
  json j = json::parse(graph.to_json());
  for (json& n : j["nodes"]) {
    const FeatureShape& s = shapes.at(n["id"].get<std::string>());
    n["shape"] = {s.height, s.width, s.channels};
  }
  return j.dump(2);
}

}  // namespace clutterlab
