#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "vlodtta/adapt.hpp"
#include "vlodtta/errors.hpp"
#include "vlodtta/sim.hpp"

namespace vlodtta {

using json = nlohmann::json;

/// Everything a bench, sweep or episode run needs. Parsed from one JSON
/// document; absent keys take the defaults below, unknown keys are errors.
struct RunConfig {
  EpisodeConfig episode;
  sim::SimConfig sim;
  sim::ShiftSpec shift;
  int seeds = 20;
  std::uint64_t first_seed = 0;
  int scenes = 20;
  std::vector<Method> methods{Method::zero_shot, Method::entropy_adapter, Method::prompt_average, Method::vlodtta};
  int threads = 1;
  bool record_timing = false;
  std::string csv_out;
  std::string episode_out;

  void validate() const {
    episode.validate();
    sim.validate();
    shift.validate();
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (scenes < 1) throw ConfigError("scenes must be >= 1");
    if (methods.empty()) throw ConfigError("methods must not be empty");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (sim.dim % episode.reduction != 0) throw ConfigError("episode.reduction must divide sim.dim");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

// Reads object members into typed fields, rejecting unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void operator()(const char* key, T& out) {
    known_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0)
            throw ConfigError("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!known_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

}  // namespace detail

inline json to_json(const EpisodeConfig& c) {
  return {{"gamma", c.gamma},   {"theta", c.theta},     {"rho", c.rho},
          {"lambda", c.lambda}, {"top_m", c.top_m},     {"kappa", c.kappa},
          {"lr", c.lr},         {"nms_iou", c.nms_iou}, {"score_thresh", c.score_thresh},
          {"reduction", c.reduction}, {"adapter_seed", c.adapter_seed}};
}

inline void from_json_into(const json& j, EpisodeConfig& c) {
  detail::ObjectReader r(j, "episode");
  r("gamma", c.gamma);
  r("theta", c.theta);
  r("rho", c.rho);
  r("lambda", c.lambda);
  r("top_m", c.top_m);
  r("kappa", c.kappa);
  r("lr", c.lr);
  r("nms_iou", c.nms_iou);
  r("score_thresh", c.score_thresh);
  r("reduction", c.reduction);
  r("adapter_seed", c.adapter_seed);
  r.finish();
}

inline json to_json(const sim::SimConfig& c) {
  return {{"dim", c.dim},
          {"classes", c.classes},
          {"prompts", c.prompts},
          {"min_objects", c.min_objects},
          {"max_objects", c.max_objects},
          {"min_cluster", c.min_cluster},
          {"max_cluster", c.max_cluster},
          {"distractor_prob", c.distractor_prob},
          {"min_distractor", c.min_distractor},
          {"max_distractor", c.max_distractor},
          {"background", c.background},
          {"jitter", c.jitter},
          {"feature_noise", c.feature_noise},
          {"alpha_floor", c.alpha_floor},
          {"distractor_alpha", c.distractor_alpha},
          {"prompt_spread", c.prompt_spread},
          {"aligned_prompts", c.aligned_prompts},
          {"shift_common", c.shift_common},
          {"shift_confuser", c.shift_confuser},
          {"shift_random", c.shift_random},
          {"image_width", c.image_width},
          {"image_height", c.image_height}};
}

inline void from_json_into(const json& j, sim::SimConfig& c) {
  detail::ObjectReader r(j, "sim");
  r("dim", c.dim);
  r("classes", c.classes);
  r("prompts", c.prompts);
  r("min_objects", c.min_objects);
  r("max_objects", c.max_objects);
  r("min_cluster", c.min_cluster);
  r("max_cluster", c.max_cluster);
  r("distractor_prob", c.distractor_prob);
  r("min_distractor", c.min_distractor);
  r("max_distractor", c.max_distractor);
  r("background", c.background);
  r("jitter", c.jitter);
  r("feature_noise", c.feature_noise);
  r("alpha_floor", c.alpha_floor);
  r("distractor_alpha", c.distractor_alpha);
  r("prompt_spread", c.prompt_spread);
  r("aligned_prompts", c.aligned_prompts);
  r("shift_common", c.shift_common);
  r("shift_confuser", c.shift_confuser);
  r("shift_random", c.shift_random);
  r("image_width", c.image_width);
  r("image_height", c.image_height);
  r.finish();
}

inline json to_json(const sim::ShiftSpec& s) { return {{"magnitude", s.magnitude}, {"noise_gain", s.noise_gain}}; }

inline void from_json_into(const json& j, sim::ShiftSpec& s) {
  detail::ObjectReader r(j, "shift");
  r("magnitude", s.magnitude);
  r("noise_gain", s.noise_gain);
  r.finish();
}

inline json to_json(const RunConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  return {{"episode", to_json(c.episode)},
          {"sim", to_json(c.sim)},
          {"shift", to_json(c.shift)},
          {"seeds", c.seeds},
          {"first_seed", c.first_seed},
          {"scenes", c.scenes},
          {"methods", methods},
          {"threads", c.threads},
          {"record_timing", c.record_timing},
          {"output", {{"csv", c.csv_out}, {"episode", c.episode_out}}}};
}

/// Parses and validates a run config.
inline RunConfig parse_run_config(const json& j) {
  RunConfig c;
  detail::ObjectReader r(j, "config");
  if (const json* e = r.sub("episode")) from_json_into(*e, c.episode);
  if (const json* s = r.sub("sim")) from_json_into(*s, c.sim);
  if (const json* s = r.sub("shift")) from_json_into(*s, c.shift);
  r("seeds", c.seeds);
  r("first_seed", c.first_seed);
  r("scenes", c.scenes);
  r("threads", c.threads);
  r("record_timing", c.record_timing);
  if (const json* m = r.sub("methods")) {
    if (!m->is_array()) throw ConfigError("config.methods: expected an array of method names");
    c.methods.clear();
    for (const auto& name : *m) {
      if (!name.is_string()) throw ConfigError("config.methods: expected strings");
      c.methods.push_back(parse_method(name.get<std::string>()));
    }
  }
  if (const json* o = r.sub("output")) {
    detail::ObjectReader out(*o, "output");
    out("csv", c.csv_out);
    out("episode", c.episode_out);
    out.finish();
  }
  r.finish();
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace vlodtta
