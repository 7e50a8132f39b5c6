#pragma once

// Deliberately naive reference implementations. They share only Box and iou()
// with the production code and exist to be compared against it.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vlodtta/geometry.hpp"

namespace vlodtta::oracle {

/// Component label per vertex (smallest member index), by depth-first search
/// over an explicit adjacency matrix.
inline std::vector<std::size_t> dfs_components(std::span<const Box> boxes, std::span<const int> classes,
                                               double theta) {
  const std::size_t n = boxes.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      adj[i][j] = i != j && classes[i] == classes[j] && iou(boxes[i], boxes[j]) >= theta;

  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(n, unset);
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] != unset) continue;
    std::vector<std::size_t> stack{start};
    label[start] = start;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && label[v] == unset) {
          label[v] = start;
          stack.push_back(v);
        }
      }
    }
  }
  return label;
}

/// Suppression-flag NMS: walk detections by descending score (lower index
/// first on ties) and mark everything a survivor overlaps.
inline std::vector<Detection> brute_force_nms(std::span<const Detection> dets, double iou_thresh, bool class_wise) {
  const std::size_t n = dets.size();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) order.push_back(i);
  // insertion sort keeps equal scores in input order
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = i; j > 0 && dets[order[j]].score > dets[order[j - 1]].score; --j)
      std::swap(order[j], order[j - 1]);

  std::vector<bool> suppressed(n, false);
  std::vector<Detection> kept;
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = order[a];
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::size_t j = order[b];
      if (class_wise && dets[j].class_id != dets[i].class_id) continue;
      if (iou(dets[i].box, dets[j].box) >= iou_thresh) suppressed[j] = true;
    }
  }
  return kept;
}

}  // namespace vlodtta::oracle
