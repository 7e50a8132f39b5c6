#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlodtta/adapt.hpp"
#include "vlodtta/config.hpp"
#include "vlodtta/errors.hpp"
#include "vlodtta/proposals.hpp"
#include "vlodtta/scoring.hpp"

namespace vlodtta {

/// One image as exchanged on disk: proposals, the prompt pool they are scored
/// against, and (possibly empty) ground truth.
struct SceneDocument {
  ProposalSet proposals;
  PromptPool pool;
  std::vector<GroundTruth> ground_truth;
};

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(cols))
      throw ConfigError(what + ": row " + std::to_string(i) + " must hold " + std::to_string(cols) + " numbers");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number()) throw ConfigError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

inline json box_to_json(const Box& b) { return json::array({b.x1(), b.y1(), b.x2(), b.y2()}); }

inline Box box_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(what + ": a box is [x1, y1, x2, y2]");
  for (const auto& v : j)
    if (!v.is_number()) throw ConfigError(what + ": non-numeric box coordinate");
  return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

inline int int_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) throw ConfigError(std::string("missing integer field '") + key + "'");
  return it->get<int>();
}

inline const json& field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace detail

inline json to_json(const SceneDocument& doc) {
  const ProposalSet& p = doc.proposals;
  json boxes = json::array();
  for (const Box& b : p.boxes) boxes.push_back(detail::box_to_json(b));
  json pool = json::array();
  for (int k = 0; k < doc.pool.classes; ++k) {
    json bank = json::array();
    for (int t = 0; t < doc.pool.prompts; ++t)
      bank.push_back(detail::matrix_to_json(doc.pool.embeddings.row(doc.pool.row_of(k, t)))[0]);
    pool.push_back(std::move(bank));
  }
  json gt = json::array();
  for (const auto& g : doc.ground_truth) gt.push_back({{"box", detail::box_to_json(g.box)}, {"class_id", g.class_id}});
  return {{"d", p.dim()},
          {"K", p.classes()},
          {"T", doc.pool.prompts},
          {"boxes", boxes},
          {"features", detail::matrix_to_json(p.features)},
          {"class_embeddings", detail::matrix_to_json(p.class_embeddings)},
          {"prompt_pool", pool},
          {"gt", gt}};
}

/// Inverse of to_json(SceneDocument). Shapes are checked against d, K and T;
/// boxes go through the Box constructor.
inline SceneDocument scene_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scene: expected a JSON object");
  const int d = detail::int_field(j, "d");
  const int k_count = detail::int_field(j, "K");
  const int t_count = detail::int_field(j, "T");
  if (d < 2 || k_count < 2 || t_count < 1) throw ConfigError("scene: need d >= 2, K >= 2, T >= 1");

  SceneDocument doc;
  const json& boxes = detail::field(j, "boxes");
  if (!boxes.is_array()) throw ConfigError("scene.boxes: expected an array");
  for (const auto& b : boxes) doc.proposals.boxes.push_back(detail::box_from_json(b, "scene.boxes"));
  doc.proposals.features = detail::matrix_from_json(detail::field(j, "features"), d, "scene.features");
  if (doc.proposals.features.rows() != static_cast<Eigen::Index>(doc.proposals.boxes.size()))
    throw ConfigError("scene: features must have one row per box");
  doc.proposals.class_embeddings =
      detail::matrix_from_json(detail::field(j, "class_embeddings"), d, "scene.class_embeddings");
  if (doc.proposals.class_embeddings.rows() != k_count) throw ConfigError("scene.class_embeddings: expected K rows");

  const json& pool = detail::field(j, "prompt_pool");
  if (!pool.is_array() || pool.size() != static_cast<std::size_t>(k_count))
    throw ConfigError("scene.prompt_pool: expected K banks");
  doc.pool.classes = k_count;
  doc.pool.prompts = t_count;
  doc.pool.embeddings.resize(static_cast<Eigen::Index>(k_count) * t_count, d);
  for (int k = 0; k < k_count; ++k) {
    const Matrix bank = detail::matrix_from_json(pool[static_cast<std::size_t>(k)], d, "scene.prompt_pool");
    if (bank.rows() != t_count) throw ConfigError("scene.prompt_pool: each bank holds T prompts");
    doc.pool.embeddings.middleRows(doc.pool.row_of(k, 0), t_count) = bank;
  }

  if (const auto it = j.find("gt"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("scene.gt: expected an array");
    for (const auto& g : *it) {
      const int c = detail::int_field(g, "class_id");
      if (c < 0 || c >= k_count) throw ConfigError("scene.gt: class_id out of range");
      doc.ground_truth.push_back({detail::box_from_json(detail::field(g, "box"), "scene.gt"), c});
    }
  }
  doc.proposals.validate();
  doc.pool.validate();
  return doc;
}

inline json to_json(const Detection& d) {
  return {{"box", detail::box_to_json(d.box)}, {"class_id", d.class_id}, {"score", d.score}};
}

/// Everything an episode computed, for offline inspection.
inline json episode_dump(const SceneDocument& scene, const EpisodeResult& result, const EpisodeConfig& cfg,
                         std::size_t scene_index) {
  const EpisodeTrace& t = result.trace;
  json clusters = json::array();
  for (const auto& row : t.cluster_table)
    clusters.push_back({{"anchor", row.anchor}, {"class_id", row.class_id}, {"size", row.size},
                        {"max_score", row.max_score}});
  json histogram = json::array();
  for (const auto& [size, count] : t.cluster_size_histogram) histogram.push_back({{"size", size}, {"count", count}});
  json detections = json::array();
  for (const auto& d : result.detections) detections.push_back(to_json(d));
  std::vector<double> weights(t.weights.data(), t.weights.data() + t.weights.size());

  return {{"scene_index", scene_index},
          {"episode", to_json(cfg)},
          {"proposals", to_json(scene)},
          {"empty_image", t.empty_image},
          {"updated", t.updated},
          {"loss", t.loss},
          {"loss_after", t.loss_after},
          {"grad_norm_phi", t.grad_norm_phi},
          {"grad_norm_delta", t.grad_norm_delta},
          {"selections", t.selections},
          {"top_m", t.top_m},
          {"weights", weights},
          {"cluster_count", t.cluster_table.size()},
          {"clusters", clusters},
          {"cluster_size_histogram", histogram},
          {"fused_before", detail::matrix_to_json(t.fused_before)},
          {"fused_after", detail::matrix_to_json(t.fused_after)},
          {"fused_before_range", {{"min", t.fused_before_range.min}, {"max", t.fused_before_range.max}}},
          {"fused_after_range", {{"min", t.fused_after_range.min}, {"max", t.fused_after_range.max}}},
          {"detections", detections}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace vlodtta
