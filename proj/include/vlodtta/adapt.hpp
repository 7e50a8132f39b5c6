#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlodtta/adapter.hpp"
#include "vlodtta/cluster.hpp"
#include "vlodtta/errors.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/grad.hpp"
#include "vlodtta/proposals.hpp"
#include "vlodtta/scoring.hpp"

namespace vlodtta {

/// Hyperparameters of one adapt-predict-reset episode.
struct EpisodeConfig {
  double gamma = 1.1;   // cluster-size exponent
  double theta = kDefaultTheta;
  double rho = 0.25;    // fraction of prompts kept per class
  double lambda = 0.3;  // weight of the selected-prompt score in the fusion
  std::size_t top_m = 600;
  double kappa = 20.0;  // logit scale applied before the softmax
  double lr = 0.05;
  double nms_iou = kDefaultNmsIou;
  double score_thresh = kDefaultScoreThreshold;
  int reduction = 16;
  std::uint64_t adapter_seed = 0;

  void validate() const {
    auto check = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    check(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
    check(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
    check(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    check(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
    check(top_m >= 1, "top_m must be >= 1");
    check(std::isfinite(kappa) && kappa > 0.0, "kappa must be finite and > 0");
    check(std::isfinite(lr) && lr >= 0.0, "lr must be finite and >= 0");
    check(nms_iou >= 0.0 && nms_iou <= 1.0, "nms_iou must lie in [0, 1]");
    check(score_thresh >= 0.0 && score_thresh <= 1.0, "score_thresh must lie in [0, 1]");
    check(reduction >= 1, "reduction must be >= 1");
  }

  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

enum class Method { zero_shot, entropy_adapter, prompt_average, vlodtta };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::zero_shot: return "zs";
    case Method::entropy_adapter: return "entropy";
    case Method::prompt_average: return "pa";
    case Method::vlodtta: return "vlodtta";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::zero_shot, Method::entropy_adapter, Method::prompt_average, Method::vlodtta})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected zs, entropy, pa or vlodtta)");
}

struct ClusterRow {
  std::size_t anchor = 0;  // proposal index of the member first in top-M order
  int class_id = 0;
  std::size_t size = 0;
  double max_score = 0.0;  // largest fused class score among members
};

struct Extrema {
  double min = 0.0;
  double max = 0.0;
};

struct EpisodeTrace {
  bool empty_image = false;
  bool updated = false;
  double loss = 0.0;        // objective before the step
  double loss_after = 0.0;  // same frozen constants, updated parameters
  double grad_norm_phi = 0.0;
  double grad_norm_delta = 0.0;
  SelectionSets selections;
  std::vector<std::size_t> top_m;
  ClusterAssignment clusters;  // indexed by position in top_m
  std::vector<ClusterRow> cluster_table;
  std::map<std::size_t, std::size_t> cluster_size_histogram;
  Matrix fused_before;
  Matrix fused_after;
  Extrema fused_before_range;
  Extrema fused_after_range;
  Vector weights;  // aligned with top_m
  std::vector<Detection> detections;
};

struct EpisodeResult {
  std::vector<Detection> detections;
  EpisodeTrace trace;
};

/// Max-class posterior confidence, score threshold, then class-wise NMS.
inline std::vector<Detection> postprocess(const std::vector<Box>& boxes, const Matrix& fused, double kappa,
                                          double score_thresh, double nms_iou) {
  const Matrix p = posterior(fused, kappa);
  const auto classes = predicted_classes(p);
  std::vector<Detection> candidates;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const int k = classes[static_cast<std::size_t>(i)];
    const double conf = p(i, k);
    if (conf >= score_thresh) candidates.push_back({boxes[static_cast<std::size_t>(i)], k, conf});
  }
  return nms(candidates, nms_iou, /*class_wise=*/true);
}

namespace detail {

struct EpisodePlan {
  bool step = true;
  bool select = true;  // false: every prompt is averaged (prompt ensemble)
};

inline Matrix fused_scores(const ProposalSet& proposals, const PromptPool& pool, const AdaptState& state,
                           const SelectionSets* frozen, SelectionSets* chosen, double rho, bool select,
                           double lambda) {
  const Matrix features = apply_adapter(proposals.features, state.phi);
  const Matrix s = detector_scores(features, proposals.class_embeddings);
  const PromptScores z = prompt_scores(features, pool, state.delta);
  if (frozen == nullptr) {
    *chosen = select ? select_prompts(image_prompt_compat(z), rho) : all_prompts(pool.classes, pool.prompts);
    frozen = chosen;
  }
  return fuse(aggregate_selected(z, *frozen), s, lambda);
}

inline Extrema extrema(const Matrix& m) {
  if (m.size() == 0) return {};
  return {m.minCoeff(), m.maxCoeff()};
}

inline EpisodeResult run_episode(const ProposalSet& proposals, const PromptPool& pool, const EpisodeConfig& cfg,
                                 EpisodePlan plan) {
  cfg.validate();
  pool.validate();
  detail::require(pool.dim() == proposals.dim() && pool.classes == proposals.classes(),
                  "proposals and prompt pool disagree on d or K");
  EpisodeResult result;
  EpisodeTrace& trace = result.trace;
  if (proposals.size() == 0) {
    trace.empty_image = true;
    return result;
  }
  proposals.validate();

  AdaptState state = AdaptState::zero_init(proposals.dim(), cfg.reduction, cfg.adapter_seed);

  trace.fused_before = fused_scores(proposals, pool, state, nullptr, &trace.selections, cfg.rho, plan.select,
                                    cfg.lambda);
  trace.fused_before_range = extrema(trace.fused_before);
  Matrix final_scores = trace.fused_before;

  if (plan.step) {
    trace.top_m = top_m_filter(trace.fused_before, cfg.top_m);
    std::vector<Box> boxes;
    Matrix subset(static_cast<Eigen::Index>(trace.top_m.size()), trace.fused_before.cols());
    for (std::size_t j = 0; j < trace.top_m.size(); ++j) {
      boxes.push_back(proposals.boxes[trace.top_m[j]]);
      subset.row(static_cast<Eigen::Index>(j)) = trace.fused_before.row(static_cast<Eigen::Index>(trace.top_m[j]));
    }
    trace.clusters = build_class_graphs(boxes, predicted_classes(subset), cfg.theta);
    trace.weights = cluster_weights(trace.clusters, cfg.gamma);

    std::map<std::size_t, ClusterRow> rows;
    for (std::size_t j = 0; j < trace.clusters.size(); ++j) {
      const std::size_t id = trace.clusters.component_id[j];
      auto [it, fresh] = rows.try_emplace(id);
      ClusterRow& row = it->second;
      const double top = subset.row(static_cast<Eigen::Index>(j)).maxCoeff();
      if (fresh) {
        row = {trace.top_m[id], trace.clusters.predicted_class[j], trace.clusters.component_size[j], top};
      } else {
        row.max_score = std::max(row.max_score, top);
      }
    }
    for (const auto& [id, row] : rows) {
      trace.cluster_table.push_back(row);
      ++trace.cluster_size_histogram[row.size];
    }

    const ObjectiveConstants constants{trace.weights, trace.selections, cfg.lambda, cfg.kappa, trace.top_m};
    const Objective objective = forward_objective(proposals, pool, state, constants);
    const Gradients grads = backward(objective);
    trace.loss = objective.loss;
    trace.grad_norm_phi = std::sqrt(grads.phi.w_down.squaredNorm() + grads.phi.b_down.squaredNorm() +
                                    grads.phi.w_up.squaredNorm() + grads.phi.b_up.squaredNorm());
    trace.grad_norm_delta = grads.delta.norm();

    state.phi.w_down -= cfg.lr * grads.phi.w_down;
    state.phi.b_down -= cfg.lr * grads.phi.b_down;
    state.phi.w_up -= cfg.lr * grads.phi.w_up;
    state.phi.b_up -= cfg.lr * grads.phi.b_up;
    state.delta -= cfg.lr * grads.delta;
    trace.updated = true;
    trace.loss_after = forward_objective(proposals, pool, state, constants).loss;

    final_scores = fused_scores(proposals, pool, state, &trace.selections, nullptr, cfg.rho, plan.select,
                                cfg.lambda);
  }

  trace.fused_after = final_scores;
  trace.fused_after_range = extrema(final_scores);
  result.detections = postprocess(proposals.boxes, final_scores, cfg.kappa, cfg.score_thresh, cfg.nms_iou);
  trace.detections = result.detections;

  state.reset();
  if (!state.at_snapshot()) throw std::logic_error("adaptation state did not return to its snapshot");
  return result;
}

}  // namespace detail

/// One adapt-predict-reset cycle on a single image: fused scores at the
/// zero-initialized state, frozen prompt selection / top-M / cluster weights,
/// one gradient step on the IoU-weighted entropy, re-scoring, post-processing
/// and reset.
inline EpisodeResult adapt_episode(const ProposalSet& proposals, const PromptPool& pool, const EpisodeConfig& cfg) {
  return detail::run_episode(proposals, pool, cfg, {});
}

/// Configuration and plan a method runs with, derived from the base config.
inline std::pair<EpisodeConfig, detail::EpisodePlan> method_setup(Method kind, EpisodeConfig cfg) {
  detail::EpisodePlan plan;
  switch (kind) {
    case Method::zero_shot:
      cfg.lambda = 0.0;
      plan.step = false;
      break;
    case Method::entropy_adapter:
      cfg.gamma = 0.0;
      cfg.lambda = 0.0;
      break;
    case Method::prompt_average:
      cfg.rho = 1.0;
      plan.step = false;
      plan.select = false;
      break;
    case Method::vlodtta:
      break;
  }
  return {cfg, plan};
}

inline EpisodeResult run_method(Method kind, const ProposalSet& proposals, const PromptPool& pool,
                                const EpisodeConfig& cfg) {
  const auto [derived, plan] = method_setup(kind, cfg);
  return detail::run_episode(proposals, pool, derived, plan);
}

/// Comparison baselines: zero-shot detector scores, the adapter trained with
/// plain mean entropy, and the all-prompt average without adaptation.
inline std::vector<Detection> run_baseline(Method kind, const ProposalSet& proposals, const PromptPool& pool,
                                           const EpisodeConfig& cfg) {
  if (kind == Method::vlodtta) throw ConfigError("run_baseline: vlodtta is not a baseline");
  return run_method(kind, proposals, pool, cfg).detections;
}

}  // namespace vlodtta
