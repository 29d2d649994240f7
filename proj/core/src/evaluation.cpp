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

#include "clutterlab/evaluation.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

namespace clutterlab {

std::string IoUReport::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassIoU& c : per_class) {
    classes.push_back({{"class_id", c.class_id},
                       {"intersection", c.intersection},
                       {"union", c.union_size},
                       {"iou", c.iou}});
  }
  return nlohmann::json{{"per_class", classes},
                        {"mean", mean},
                        {"classes_evaluated", classes_evaluated}}
      .dump();
}

IoUReport mask_miou(const LabelMap& pred, const LabelMap& truth) {
  if (!pred.same_dims(truth)) {
    throw ValidationError("prediction and truth differ in size");
  }
  std::map<ClassId, std::pair<std::uint64_t, std::uint64_t>> counts;
  auto p = pred.data();
  auto t = truth.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == t[i]) {
      if (p[i] != 0) {
        ++counts[p[i]].first;
        ++counts[p[i]].second;
      }
      continue;
    }
    if (p[i] != 0) ++counts[p[i]].second;
    if (t[i] != 0) ++counts[t[i]].second;
  }
  IoUReport report;
  double sum = 0.0;
  for (const auto& [id, c] : counts) {
    const double iou = static_cast<double>(c.first) / static_cast<double>(c.second);
    report.per_class.push_back(ClassIoU{id, c.first, c.second, iou});
    sum += iou;
  }
  report.classes_evaluated = report.per_class.size();
  report.mean = report.per_class.empty()
                    ? 1.0
                    : sum / static_cast<double>(report.per_class.size());
  return report;
}

AreaRatio box_overlap(const Box& a, const Box& b) {
  AreaRatio r;
  if (auto inter = intersect(a, b)) r.intersection = inter->area();
  r.union_area = a.area() + b.area() - r.intersection;
  return r;
}

double box_iou(const Box& a, const Box& b) {
  const AreaRatio r = box_overlap(a, b);
  if (r.union_area <= 0) return 0.0;
  return static_cast<double>(r.intersection) / static_cast<double>(r.union_area);
}

double box_set_miou(const std::vector<Box>& preds,
                    const std::vector<Box>& truths) {
  const std::size_t n = std::max(preds.size(), truths.size());
  if (n == 0) return 1.0;
  struct Pair {
    double iou;
    std::size_t pred;
    std::size_t truth;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < truths.size(); ++j) {
      const double iou = box_iou(preds[i], truths[j]);
      if (iou > 0.0) pairs.push_back(Pair{iou, i, j});
    }
  }
  // Descending IoU; equal IoUs go to the lower prediction, then truth index.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.pred, a.truth) < std::tie(b.pred, b.truth);
  });
  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> truth_used(truths.size(), false);
  double sum = 0.0;
  for (const Pair& pr : pairs) {
    if (pred_used[pr.pred] || truth_used[pr.truth]) continue;
    pred_used[pr.pred] = true;
    truth_used[pr.truth] = true;
    sum += pr.iou;
  }
  return sum / static_cast<double>(n);
}

}  // namespace clutterlab
