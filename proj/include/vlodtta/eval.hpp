#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vlodtta/geometry.hpp"
#include "vlodtta/proposals.hpp"

namespace vlodtta {

inline constexpr std::size_t kIouThresholdCount = 10;
inline constexpr std::size_t kRecallPoints = 101;

/// 0.50:0.05:0.95, generated as i * ((0.95 - 0.5) / 9) + 0.5 with the
/// endpoint pinned. This reproduces the reference protocol's threshold values
/// bit-for-bit (0.8999999999999999, not 0.9).
inline std::array<double, kIouThresholdCount> iou_thresholds() {
  std::array<double, kIouThresholdCount> t{};
  const double step = (0.95 - 0.5) / 9.0;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * step + 0.5;
  t.back() = 0.95;
  return t;
}

inline std::array<double, kRecallPoints> recall_grid() {
  std::array<double, kRecallPoints> r{};
  const double step = 1.0 / 100.0;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>(i) * step;
  r.back() = 1.0;
  return r;
}

/// Detections and ground truth of one image.
struct ImageRecord {
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truth;
};

struct MatchResult {
  std::vector<double> scores;           // descending
  std::vector<bool> true_positive;      // aligned with scores
  std::size_t n_gt = 0;
};

/// Greedy matching in descending score order (ties by input order). Each
/// detection takes the unmatched same-class ground truth with the highest
/// IoU >= iou_thresh; among equal IoUs the later ground truth wins, as in the
/// reference protocol. Each ground truth is matched at most once.
inline MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                    double iou_thresh) {
  MatchResult out;
  out.n_gt = gts.size();
  const auto order = detail::descending_order(dets.size(), [&](std::size_t i) { return dets[i].score; });
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t idx : order) {
    const Detection& det = dets[idx];
    double best = iou_thresh;
    std::optional<std::size_t> match;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != det.class_id) continue;
      const double v = iou(det.box, gts[g].box);
      if (v < best) continue;
      best = v;
      match = g;
    }
    if (match) taken[*match] = true;
    out.scores.push_back(det.score);
    out.true_positive.push_back(match.has_value());
  }
  return out;
}

/// 101-point interpolated AP from TP/FP flags already sorted by descending
/// score. Returns nullopt when there is no ground truth (class skipped).
inline std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  const std::size_t n = flags.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (flags[i] ? tp : fp) += 1.0;
    recall[i] = tp / static_cast<double>(n_gt);
    precision[i] = tp / (tp + fp);
  }
  // Precision envelope: max precision at any recall >= the current one.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0.0;
  for (double r : recall_grid()) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(kRecallPoints);
}

struct ClassAP {
  int class_id = 0;
  std::size_t n_gt = 0;
  std::array<double, kIouThresholdCount> ap{};  // per IoU threshold
};

struct APReport {
  double map = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::vector<ClassAP> per_class;  // classes with at least one ground truth
};

/// COCO-protocol AP over a set of images. Per class and threshold,
/// detections from all images are ranked together (stable in image order);
/// classes without ground truth are excluded from the means.
inline APReport evaluate(std::span<const ImageRecord> images, int num_classes) {
  const auto thresholds = iou_thresholds();
  APReport report;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<std::vector<Detection>> dets(images.size());
    std::vector<std::vector<GroundTruth>> gts(images.size());
    std::size_t n_gt = 0;
    for (std::size_t img = 0; img < images.size(); ++img) {
      for (const auto& d : images[img].detections)
        if (d.class_id == c) dets[img].push_back(d);
      for (const auto& g : images[img].ground_truth)
        if (g.class_id == c) gts[img].push_back(g);
      n_gt += gts[img].size();
    }
    if (n_gt == 0) continue;

    ClassAP row{c, n_gt, {}};
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<double> scores;
      std::vector<bool> flags;
      for (std::size_t img = 0; img < images.size(); ++img) {
        const MatchResult m = match_detections(dets[img], gts[img], thresholds[t]);
        scores.insert(scores.end(), m.scores.begin(), m.scores.end());
        flags.insert(flags.end(), m.true_positive.begin(), m.true_positive.end());
      }
      const auto order = detail::descending_order(scores.size(), [&](std::size_t i) { return scores[i]; });
      std::vector<bool> sorted(order.size());
      for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = flags[order[i]];
      row.ap[t] = *average_precision(sorted, n_gt);
    }
    report.per_class.push_back(row);
  }

  if (report.per_class.empty()) return report;
  const double classes = static_cast<double>(report.per_class.size());
  double total = 0.0;
  for (const auto& row : report.per_class) {
    for (double ap : row.ap) total += ap;
    report.ap50 += row.ap[0] / classes;
    report.ap75 += row.ap[5] / classes;
  }
  report.map = total / (classes * static_cast<double>(kIouThresholdCount));
  return report;
}

}  // namespace vlodtta
