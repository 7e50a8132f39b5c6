#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "vlodtta/errors.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/linalg.hpp"

namespace vlodtta {

/// Guard for L2 normalization: rows with norm <= kNormEps are rejected.
inline constexpr double kNormEps = 1e-12;

inline Matrix normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (!(norm > kNormEps)) {
      std::ostringstream os;
      os << "row " << i << " has norm " << norm << " (guard " << kNormEps << ")";
      throw NearZeroRow(os.str());
    }
    out.row(i) = m.row(i) / norm;
  }
  return out;
}

/// Cosine similarity between every region feature and every class embedding.
inline Matrix detector_scores(const Matrix& features, const Matrix& class_embeddings) {
  detail::require(features.cols() == class_embeddings.cols(),
                  "detector_scores: feature and embedding dimensions differ");
  return normalize_rows(features) * normalize_rows(class_embeddings).transpose();
}

/// Row-wise softmax of kappa * scores, computed with max subtraction.
inline Matrix posterior(const Matrix& scores, double kappa) {
  if (!(std::isfinite(kappa) && kappa > 0.0)) throw ConfigError("kappa must be finite and > 0");
  Matrix p(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const RowVector logits = kappa * scores.row(i);
    const RowVector e = (logits.array() - logits.maxCoeff()).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

/// Shannon entropy (natural log) per row, with 0 ln 0 taken as 0.
inline Vector entropy(const Matrix& p) {
  Vector h(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double pk = p(i, k);
      if (pk > 0.0) acc -= pk * std::log(pk);
    }
    h(i) = acc;
  }
  return h;
}

/// Per-class bank of prompt embeddings. Row k*T + t holds prompt t of class k.
struct PromptPool {
  int classes = 0;
  int prompts = 0;
  Matrix embeddings;

  int dim() const { return static_cast<int>(embeddings.cols()); }
  Eigen::Index row_of(int k, int t) const { return static_cast<Eigen::Index>(k) * prompts + t; }

  void validate() const {
    detail::require(classes >= 1 && prompts >= 1, "prompt pool needs K >= 1 and T >= 1");
    detail::require(embeddings.rows() == static_cast<Eigen::Index>(classes) * prompts,
                    "prompt pool has K*T rows");
    detail::require(embeddings.allFinite(), "prompt pool entries must be finite");
  }
};

/// z(i, k, t) stored as an N x (K*T) matrix, column k*T + t.
struct PromptScores {
  int classes = 0;
  int prompts = 0;
  Matrix values;

  Eigen::Index proposals() const { return values.rows(); }
  double operator()(Eigen::Index i, int k, int t) const {
    return values(i, static_cast<Eigen::Index>(k) * prompts + t);
  }
};

/// Pool embeddings after adding the shared residual to every row.
inline Matrix shifted_prompts(const PromptPool& pool, const RowVector& delta) {
  detail::require(delta.size() == pool.embeddings.cols(), "residual dimension differs from pool");
  return pool.embeddings.rowwise() + delta;
}

/// Cosine of every region feature against every (residual-shifted) prompt.
inline PromptScores prompt_scores(const Matrix& features, const PromptPool& pool,
                                  const RowVector& delta) {
  detail::require(features.cols() == pool.embeddings.cols(),
                  "prompt_scores: feature and prompt dimensions differ");
  PromptScores z{pool.classes, pool.prompts, {}};
  z.values = normalize_rows(features) * normalize_rows(shifted_prompts(pool, delta)).transpose();
  return z;
}

/// Mean prompt score over proposals, one entry per (class, prompt).
inline Matrix image_prompt_compat(const PromptScores& z) {
  detail::require(z.proposals() >= 1, "image_prompt_compat needs at least one proposal");
  const RowVector mean = z.values.colwise().mean();
  Matrix r(z.classes, z.prompts);
  for (int k = 0; k < z.classes; ++k)
    for (int t = 0; t < z.prompts; ++t) r(k, t) = mean(static_cast<Eigen::Index>(k) * z.prompts + t);
  return r;
}

/// Per class, the selected prompt indices ordered by descending compatibility.
using SelectionSets = std::vector<std::vector<int>>;

/// Number of prompts kept out of `prompts` for fraction rho: ceil(rho*T), at
/// least 1. A 1e-9 slack absorbs products like 0.3*10 = 3.0000000000000004.
inline int selection_size(int prompts, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  const int n = static_cast<int>(std::ceil(rho * prompts - 1e-9));
  return std::clamp(n, 1, prompts);
}

inline SelectionSets select_prompts(const Matrix& compat, double rho) {
  const int prompts = static_cast<int>(compat.cols());
  const int keep = selection_size(prompts, rho);
  SelectionSets sets(static_cast<std::size_t>(compat.rows()));
  for (Eigen::Index k = 0; k < compat.rows(); ++k) {
    const auto order = detail::descending_order(static_cast<std::size_t>(prompts),
                                                [&](std::size_t t) { return compat(k, static_cast<Eigen::Index>(t)); });
    auto& s = sets[static_cast<std::size_t>(k)];
    for (int j = 0; j < keep; ++j) s.push_back(static_cast<int>(order[static_cast<std::size_t>(j)]));
  }
  return sets;
}

/// Selection sets that keep every prompt (the prompt-averaging ensemble).
inline SelectionSets all_prompts(int classes, int prompts) {
  SelectionSets sets(static_cast<std::size_t>(classes));
  for (auto& s : sets)
    for (int t = 0; t < prompts; ++t) s.push_back(t);
  return sets;
}

/// (K*T) x K averaging matrix: column k holds 1/|S_k| on the rows of S_k.
/// Multiplying prompt scores by it yields the aggregated class scores.
inline Matrix selection_matrix(const SelectionSets& sets, int classes, int prompts) {
  detail::require(sets.size() == static_cast<std::size_t>(classes), "one selection set per class");
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(classes) * prompts, classes);
  for (int k = 0; k < classes; ++k) {
    const auto& s = sets[static_cast<std::size_t>(k)];
    detail::require(!s.empty(), "selection sets must be non-empty");
    for (int t : s) {
      detail::require(t >= 0 && t < prompts, "selection index out of range");
      a(static_cast<Eigen::Index>(k) * prompts + t, k) = 1.0 / static_cast<double>(s.size());
    }
  }
  return a;
}

inline Matrix aggregate_selected(const PromptScores& z, const SelectionSets& sets) {
  Matrix out(z.proposals(), z.classes);
  for (int k = 0; k < z.classes; ++k) {
    // Summation runs in ascending prompt index so the result does not depend
    // on the rank order stored in the set.
    auto s = sets.at(static_cast<std::size_t>(k));
    detail::require(!s.empty(), "selection sets must be non-empty");
    std::sort(s.begin(), s.end());
    for (Eigen::Index i = 0; i < z.proposals(); ++i) {
      double acc = 0.0;
      for (int t : s) acc += z(i, k, t);
      out(i, k) = acc / static_cast<double>(s.size());
    }
  }
  return out;
}

/// lambda * z_tilde + (1 - lambda) * s.
inline Matrix fuse(const Matrix& z_tilde, const Matrix& s, double lambda) {
  detail::require(z_tilde.rows() == s.rows() && z_tilde.cols() == s.cols(), "fuse: shapes differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  return (lambda * z_tilde.array() + (1.0 - lambda) * s.array()).matrix();
}

}  // namespace vlodtta
