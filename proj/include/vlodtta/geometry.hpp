#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "vlodtta/errors.hpp"
#include "vlodtta/linalg.hpp"

namespace vlodtta {

inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr double kDefaultScoreThreshold = 0.1;

/// Axis-aligned box in continuous pixel coordinates.
///
/// Construction rejects non-finite coordinates and zero or negative area, so
/// every Box in the system has a well-defined, strictly positive area.
class Box {
 public:
  Box(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
      throw InvalidBox("box coordinates must be finite");
    }
    if (!(x1 < x2) || !(y1 < y2)) {
      std::ostringstream os;
      os << "degenerate box (" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
      throw InvalidBox(os.str());
    }
  }

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x1_, y1_, x2_, y2_;
};

struct Detection {
  Box box;
  int class_id = 0;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

inline double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace detail {

// Indices ordered by descending key; equal keys keep input order.
template <typename Key>
std::vector<std::size_t> descending_order(std::size_t n, Key key) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

}  // namespace detail

/// Greedy non-maximum suppression.
///
/// Detections are visited in descending score order (ties by input index). A
/// detection is dropped iff an already kept detection overlaps it with
/// IoU >= iou_thresh; with `class_wise` only kept detections of the same class
/// can suppress. The result is in descending score order.
inline std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh,
                                  bool class_wise) {
  if (!(iou_thresh >= 0.0 && iou_thresh <= 1.0)) {
    throw ConfigError("nms iou threshold must lie in [0, 1]");
  }
  const auto order = detail::descending_order(dets.size(), [&](std::size_t i) { return dets[i].score; });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const Detection& cand = dets[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      if (class_wise && k.class_id != cand.class_id) return false;
      return iou(k.box, cand.box) >= iou_thresh;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

/// Indices of the min(N, m) rows with the largest row maximum, in descending
/// order of that maximum; ties go to the lower index.
inline std::vector<std::size_t> top_m_filter(const Matrix& scores, std::size_t m) {
  if (m < 1) throw ConfigError("top-M filter needs m >= 1");
  const auto n = static_cast<std::size_t>(scores.rows());
  Vector row_max(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) row_max(i) = scores.row(i).maxCoeff();
  auto order = detail::descending_order(n, [&](std::size_t i) { return row_max(static_cast<Eigen::Index>(i)); });
  order.resize(std::min(n, m));
  return order;
}

}  // namespace vlodtta
