#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "vlodtta/errors.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/linalg.hpp"

namespace vlodtta {

inline constexpr double kDefaultTheta = 0.6;

/// Union-find with union by size and path halving.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Per-proposal cluster membership.
///
/// `component_id` is the smallest proposal index inside the component, so ids
/// are stable under input order. Proposals in one component always share
/// `predicted_class`.
struct ClusterAssignment {
  std::vector<int> predicted_class;
  std::vector<std::size_t> component_id;
  std::vector<std::size_t> component_size;

  std::size_t size() const { return component_id.size(); }
  std::size_t component_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < component_id.size(); ++i) n += component_id[i] == i ? 1 : 0;
    return n;
  }
};

/// Row-wise argmax, ties to the lower class index.
inline std::vector<int> predicted_classes(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

/// Connected components of the class-specific IoU graphs: i and j are adjacent
/// iff they share a predicted class and IoU(b_i, b_j) >= theta.
inline ClusterAssignment build_class_graphs(std::span<const Box> boxes, std::span<const int> classes,
                                            double theta) {
  detail::require(boxes.size() == classes.size(), "build_class_graphs: boxes and classes differ in length");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  const std::size_t n = boxes.size();
  DisjointSet dsu(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (classes[i] == classes[j] && iou(boxes[i], boxes[j]) >= theta) dsu.unite(i, j);

  ClusterAssignment out;
  out.predicted_class.assign(classes.begin(), classes.end());
  out.component_id.resize(n);
  out.component_size.resize(n);
  std::vector<std::size_t> smallest(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = dsu.find(i);
    if (smallest[root] == n) smallest[root] = i;
    out.component_id[i] = smallest[root];
    out.component_size[i] = dsu.size_of(root);
  }
  return out;
}

/// w_i = |C(i)|^gamma.
inline Vector cluster_weights(const ClusterAssignment& assignment, double gamma) {
  if (!std::isfinite(gamma) || gamma < 0.0) throw ConfigError("gamma must be finite and >= 0");
  Vector w(static_cast<Eigen::Index>(assignment.size()));
  for (std::size_t i = 0; i < assignment.size(); ++i)
    w(static_cast<Eigen::Index>(i)) = std::pow(static_cast<double>(assignment.component_size[i]), gamma);
  return w;
}

/// IoU-weighted entropy: sum(w * h) / sum(w).
inline double iwe_loss(const Vector& entropies, const Vector& weights) {
  detail::require(entropies.size() == weights.size(), "iwe_loss: entropy and weight lengths differ");
  const double total = weights.sum();
  if (!(total > 0.0)) throw DegenerateWeights("cluster weights must have a positive sum");
  return weights.dot(entropies) / total;
}

}  // namespace vlodtta
