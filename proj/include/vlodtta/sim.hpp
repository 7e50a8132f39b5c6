#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "vlodtta/errors.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/linalg.hpp"
#include "vlodtta/proposals.hpp"
#include "vlodtta/random.hpp"
#include "vlodtta/scoring.hpp"

namespace vlodtta::sim {

/// Generator profile. Defaults are the "desk-small" profile.
struct SimConfig {
  int dim = 32;
  int classes = 6;
  int prompts = 16;
  int min_objects = 2;
  int max_objects = 5;
  int min_cluster = 20;  // proposals per object
  int max_cluster = 60;
  double distractor_prob = 0.1;  // per object
  int min_distractor = 5;
  int max_distractor = 15;
  int background = 40;
  double jitter = 0.25;         // largest per-proposal jitter, relative to object size
  double feature_noise = 1.5;   // noise amplitude relative to a unit prototype
  double alpha_floor = 0.2;     // alpha(IoU) = max(alpha_floor, IoU)
  double distractor_alpha = 0.8;
  double prompt_spread = 1.0;   // prompt perturbation magnitude q ~ spread * U(0.5, 1)
  int aligned_prompts = 4;      // shift-aligned prompts per class
  double shift_common = 0.5;    // direction-field mixture weights
  double shift_confuser = 0.6;
  double shift_random = 0.6;
  double image_width = 640.0;
  double image_height = 480.0;

  void validate() const {
    auto check = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    check(dim >= 2 && classes >= 2 && prompts >= 1, "sim needs d >= 2, K >= 2, T >= 1");
    check(classes <= 4096, "sim supports at most 4096 classes");
    check(min_objects >= 1 && max_objects >= min_objects, "object count range is invalid");
    check(min_cluster >= 1 && max_cluster >= min_cluster, "cluster size range is invalid");
    check(distractor_prob >= 0.0 && distractor_prob <= 1.0, "distractor_prob must lie in [0, 1]");
    check(min_distractor >= 1 && max_distractor >= min_distractor, "distractor size range is invalid");
    check(background >= 0, "background count must be >= 0");
    check(jitter >= 0.0 && feature_noise >= 0.0 && prompt_spread >= 0.0, "jitter, noise and spread must be >= 0");
    check(alpha_floor >= 0.0 && alpha_floor <= 1.0, "alpha_floor must lie in [0, 1]");
    check(distractor_alpha >= 0.0 && distractor_alpha <= 1.0, "distractor_alpha must lie in [0, 1]");
    check(aligned_prompts >= 0 && aligned_prompts <= prompts, "aligned_prompts must lie in [0, T]");
    check(shift_common >= 0.0 && shift_confuser >= 0.0 && shift_random >= 0.0, "shift mixture must be >= 0");
    check(shift_common + shift_confuser + shift_random > 0.0, "shift mixture must not be all zero");
    check(image_width >= 16.0 && image_height >= 16.0, "image must be at least 16 x 16");
  }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Test-domain shift. Prototypes rotate toward their class's shift direction
/// by magnitude * 90 degrees, and feature noise grows by (1 + noise_gain *
/// magnitude). Magnitude 0 is the identity.
struct ShiftSpec {
  double magnitude = 0.5;
  double noise_gain = 1.0;

  void validate() const {
    if (!(magnitude >= 0.0 && magnitude <= 1.0)) throw ConfigError("shift magnitude must lie in [0, 1]");
    if (!(noise_gain >= 0.0 && std::isfinite(noise_gain))) throw ConfigError("noise_gain must be >= 0");
  }

  friend bool operator==(const ShiftSpec&, const ShiftSpec&) = default;
};

struct World {
  Matrix prototypes;        // K x d, unit rows; also the base class embeddings
  Matrix shift_directions;  // K x d, unit rows orthogonal to the matching prototype
  PromptPool pool;
  std::vector<std::vector<int>> aligned;  // per class, sorted shift-aligned prompt indices
};

enum class ProposalKind { object, distractor, background };

struct SceneSample {
  double width = 0.0;
  double height = 0.0;
  std::vector<GroundTruth> ground_truth;
  ProposalSet proposals;
  std::vector<ProposalKind> kinds;
  std::vector<int> owner;  // object index a proposal belongs to or sits next to; -1 for background
};

namespace detail {

inline RowVector orthogonal_unit(const RowVector& raw, const RowVector& axis, Rng& rng) {
  RowVector v = raw - raw.dot(axis) * axis;
  while (v.norm() < 1e-9) {
    const RowVector r = rng.unit_vector(static_cast<int>(axis.size()));
    v = r - r.dot(axis) * axis;
  }
  return v / v.norm();
}

inline RowVector unit(const RowVector& v) {
  const double n = v.norm();
  if (!(n > kNormEps)) throw NearZeroRow("generated a zero feature vector");
  return v / n;
}

inline double clamp_coord(double x, double hi) { return std::clamp(x, 0.0, hi); }

// Jittered copy of `base`, clipped to the image with at least 1 px extent.
inline Box jitter_box(const Box& base, double scale, double width, double height, Rng& rng) {
  const double w = base.width();
  const double h = base.height();
  double x1 = base.x1() + rng.normal() * scale * w;
  double y1 = base.y1() + rng.normal() * scale * h;
  double x2 = base.x2() + rng.normal() * scale * w;
  double y2 = base.y2() + rng.normal() * scale * h;
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  x1 = clamp_coord(x1, width - 1.0);
  y1 = clamp_coord(y1, height - 1.0);
  x2 = std::clamp(x2, x1 + 1.0, width);
  y2 = std::clamp(y2, y1 + 1.0, height);
  return {x1, y1, x2, y2};
}

inline Box random_box(double min_frac, double max_frac, double width, double height, Rng& rng) {
  const double w = rng.uniform(min_frac, max_frac) * width;
  const double h = rng.uniform(min_frac, max_frac) * height;
  const double x1 = rng.uniform(0.0, width - w);
  const double y1 = rng.uniform(0.0, height - h);
  return {x1, y1, x1 + w, y1 + h};
}

}  // namespace detail

/// Class prototypes, the shift direction field, and the prompt pool.
///
/// Prompt t of class k is normalize(p_k + q * n) with q ~ spread * U(0.5, 1).
/// For the `aligned_prompts` shift-aligned prompts n is the class's shift
/// direction; for the rest it is a random unit vector.
inline World gen_world(std::uint64_t seed, const SimConfig& cfg) {
  cfg.validate();
  const Rng root(seed);
  Rng proto_rng = root.split(1);
  Rng field_rng = root.split(2);
  Rng prompt_rng = root.split(3);
  const int d = cfg.dim;
  const int k_count = cfg.classes;

  World w;
  w.prototypes.resize(k_count, d);
  for (int k = 0; k < k_count; ++k) w.prototypes.row(k) = proto_rng.unit_vector(d);

  const RowVector common = field_rng.unit_vector(d);
  w.shift_directions.resize(k_count, d);
  for (int k = 0; k < k_count; ++k) {
    const RowVector p = w.prototypes.row(k);
    const RowVector raw = cfg.shift_common * common + cfg.shift_confuser * RowVector(w.prototypes.row((k + 1) % k_count)) +
                          cfg.shift_random * field_rng.unit_vector(d);
    w.shift_directions.row(k) = detail::orthogonal_unit(raw, p, field_rng);
  }

  w.pool.classes = k_count;
  w.pool.prompts = cfg.prompts;
  w.pool.embeddings.resize(static_cast<Eigen::Index>(k_count) * cfg.prompts, d);
  w.aligned.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    std::vector<int> order(static_cast<std::size_t>(cfg.prompts));
    for (int t = 0; t < cfg.prompts; ++t) order[static_cast<std::size_t>(t)] = t;
    for (int t = 0; t < cfg.aligned_prompts; ++t) {
      const int j = prompt_rng.uniform_int(t, cfg.prompts - 1);
      std::swap(order[static_cast<std::size_t>(t)], order[static_cast<std::size_t>(j)]);
    }
    auto& aligned = w.aligned[static_cast<std::size_t>(k)];
    aligned.assign(order.begin(), order.begin() + cfg.aligned_prompts);
    std::sort(aligned.begin(), aligned.end());

    const RowVector p = w.prototypes.row(k);
    for (int t = 0; t < cfg.prompts; ++t) {
      const double q = cfg.prompt_spread * prompt_rng.uniform(0.5, 1.0);
      const bool is_aligned = std::binary_search(aligned.begin(), aligned.end(), t);
      const RowVector dir = is_aligned ? RowVector(w.shift_directions.row(k)) : prompt_rng.unit_vector(d);
      w.pool.embeddings.row(w.pool.row_of(k, t)) = detail::unit(p + q * dir);
    }
  }
  return w;
}

/// Prototype of class k as seen in the shifted test domain.
inline RowVector shifted_prototype(const World& w, int k, const ShiftSpec& shift) {
  const double angle = shift.magnitude * std::numbers::pi / 2.0;
  return std::cos(angle) * w.prototypes.row(k) + std::sin(angle) * w.shift_directions.row(k);
}

/// One scene: ground-truth objects, a jittered proposal cluster per object,
/// occasional wrong-class distractor clusters next to an object, and
/// background proposals carrying pure noise features.
///
/// Object proposal features are normalize(alpha * shifted_prototype +
/// (1 - alpha) * noise) with alpha = max(alpha_floor, IoU with the object).
inline SceneSample gen_scene_proposals(std::uint64_t seed, const SimConfig& cfg, const World& world,
                                       const ShiftSpec& shift) {
  cfg.validate();
  shift.validate();
  vlodtta::detail::require(world.prototypes.rows() == cfg.classes && world.prototypes.cols() == cfg.dim,
                  "world does not match the sim config");
  const Rng root(seed);
  Rng layout = root.split(1);
  Rng feature_rng = root.split(2);
  const int d = cfg.dim;
  const double noise = cfg.feature_noise * (1.0 + shift.noise_gain * shift.magnitude);
  const double width = cfg.image_width;
  const double height = cfg.image_height;

  Matrix shifted(cfg.classes, d);
  for (int k = 0; k < cfg.classes; ++k) shifted.row(k) = shifted_prototype(world, k, shift);

  SceneSample out;
  out.width = width;
  out.height = height;
  std::vector<RowVector> features;

  auto add = [&](const Box& box, const RowVector& feature, ProposalKind kind, int owner) {
    out.proposals.boxes.push_back(box);
    features.push_back(feature);
    out.kinds.push_back(kind);
    out.owner.push_back(owner);
  };
  auto feature_for = [&](int k, double alpha) {
    const RowVector n = feature_rng.unit_vector(d);
    if (alpha >= 1.0) return RowVector(shifted.row(k));
    return detail::unit(alpha * shifted.row(k) + (1.0 - alpha) * noise * n);
  };

  const int n_objects = layout.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int o = 0; o < n_objects; ++o) {
    const int k = layout.uniform_int(0, cfg.classes - 1);
    const Box gt = detail::random_box(0.1, 0.35, width, height, layout);
    out.ground_truth.push_back({gt, k});

    const int n = layout.uniform_int(cfg.min_cluster, cfg.max_cluster);
    for (int j = 0; j < n; ++j) {
      const double scale = j == 0 ? 0.1 * cfg.jitter : layout.uniform(0.0, cfg.jitter);
      const Box b = scale > 0.0 ? detail::jitter_box(gt, scale, width, height, layout) : gt;
      const double alpha = std::max(cfg.alpha_floor, iou(b, gt));
      add(b, feature_for(k, alpha), ProposalKind::object, o);
    }

    if (layout.uniform() < cfg.distractor_prob) {
      int wrong = layout.uniform_int(0, cfg.classes - 2);
      if (wrong >= k) ++wrong;
      const double side = layout.uniform() < 0.5 ? -1.0 : 1.0;
      const double s = layout.uniform(0.6, 1.0);
      const double cx = 0.5 * (gt.x1() + gt.x2()) + side * 0.6 * gt.width();
      const double cy = 0.5 * (gt.y1() + gt.y2()) + layout.uniform(-0.2, 0.2) * gt.height();
      const double hw = 0.5 * s * gt.width();
      const double hh = 0.5 * s * gt.height();
      const double x1 = detail::clamp_coord(cx - hw, width - 2.0);
      const double y1 = detail::clamp_coord(cy - hh, height - 2.0);
      const Box anchor(x1, y1, std::clamp(cx + hw, x1 + 2.0, width), std::clamp(cy + hh, y1 + 2.0, height));
      const int m = layout.uniform_int(cfg.min_distractor, cfg.max_distractor);
      for (int j = 0; j < m; ++j) {
        const Box b = detail::jitter_box(anchor, layout.uniform(0.0, cfg.jitter), width, height, layout);
        const double alpha = cfg.distractor_alpha * std::max(cfg.alpha_floor, iou(b, anchor));
        add(b, feature_for(wrong, alpha), ProposalKind::distractor, o);
      }
    }
  }

  for (int j = 0; j < cfg.background; ++j) {
    const Box b = detail::random_box(0.05, 0.3, width, height, layout);
    add(b, feature_rng.unit_vector(d), ProposalKind::background, -1);
  }

  out.proposals.features.resize(static_cast<Eigen::Index>(features.size()), d);
  for (std::size_t i = 0; i < features.size(); ++i) out.proposals.features.row(static_cast<Eigen::Index>(i)) = features[i];
  out.proposals.class_embeddings = world.prototypes;
  return out;
}

inline std::uint64_t scene_seed(std::uint64_t base_seed, std::uint64_t index) { return base_seed * 1000003ULL + index; }

inline std::vector<SceneSample> make_suite(std::uint64_t base_seed, int n_scenes, const SimConfig& cfg,
                                           const World& world, const ShiftSpec& shift) {
  if (n_scenes < 1) throw ConfigError("a suite needs at least one scene");
  std::vector<SceneSample> suite;
  suite.reserve(static_cast<std::size_t>(n_scenes));
  for (int i = 0; i < n_scenes; ++i)
    suite.push_back(gen_scene_proposals(scene_seed(base_seed, static_cast<std::uint64_t>(i)), cfg, world, shift));
  return suite;
}

}  // namespace vlodtta::sim
