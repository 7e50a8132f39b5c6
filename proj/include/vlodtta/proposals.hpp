#pragma once

#include <vector>

#include "vlodtta/errors.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/linalg.hpp"

namespace vlodtta {

struct GroundTruth {
  Box box;
  int class_id = 0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Detector output for one image: candidate boxes, their region features and
/// the base class embeddings the detector scores them against.
struct ProposalSet {
  std::vector<Box> boxes;
  Matrix features;          // N x d
  Matrix class_embeddings;  // K x d

  Eigen::Index size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }
  int classes() const { return static_cast<int>(class_embeddings.rows()); }

  void validate() const {
    detail::require(boxes.size() == static_cast<std::size_t>(features.rows()),
                    "one box per feature row");
    detail::require(class_embeddings.cols() == features.cols(),
                    "features and class embeddings share a dimension");
    detail::require(features.cols() >= 2, "feature dimension must be >= 2");
    detail::require(class_embeddings.rows() >= 2, "need at least two classes");
    detail::require(features.allFinite() && class_embeddings.allFinite(), "features must be finite");
  }
};

}  // namespace vlodtta
