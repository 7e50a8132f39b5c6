#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vlodtta/adapt.hpp"
#include "vlodtta/config.hpp"
#include "vlodtta/eval.hpp"
#include "vlodtta/sim.hpp"

namespace vlodtta {

inline constexpr const char* kCsvHeader = "method,base_seed,n_scenes,shift_magnitude,mAP,AP50,AP75,mean_episode_ms";

struct ResultRow {
  Method method = Method::vlodtta;
  std::uint64_t base_seed = 0;
  int n_scenes = 0;
  double shift_magnitude = 0.0;
  double map = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double mean_episode_ms = 0.0;
};

struct SuiteResult {
  APReport report;
  std::vector<EpisodeResult> episodes;
  double mean_episode_ms = 0.0;
};

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write results into pre-sized slots, so the
/// outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline SuiteResult run_suite(Method method, const std::vector<sim::SceneSample>& suite, const sim::World& world,
                             const EpisodeConfig& cfg, int threads = 1, bool keep_episodes = false) {
  SuiteResult out;
  std::vector<ImageRecord> images(suite.size());
  std::vector<double> elapsed(suite.size());
  if (keep_episodes) out.episodes.resize(suite.size());
  parallel_for(suite.size(), threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    EpisodeResult r = run_method(method, suite[i].proposals, world.pool, cfg);
    elapsed[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    images[i] = {r.detections, suite[i].ground_truth};
    if (keep_episodes) out.episodes[i] = std::move(r);
  });
  out.report = evaluate(images, world.pool.classes);
  double total = 0.0;
  for (double e : elapsed) total += e;
  out.mean_episode_ms = total / static_cast<double>(suite.size());
  return out;
}

/// One row per (method, seed); the world and suite of seed s are generated
/// from base seed s.
inline std::vector<ResultRow> run_bench(const RunConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  for (Method method : cfg.methods) {
    for (int j = 0; j < cfg.seeds; ++j) {
      const std::uint64_t seed = cfg.first_seed + static_cast<std::uint64_t>(j);
      const sim::World world = sim::gen_world(seed, cfg.sim);
      const auto suite = sim::make_suite(seed, cfg.scenes, cfg.sim, world, cfg.shift);
      const SuiteResult r = run_suite(method, suite, world, cfg.episode, cfg.threads);
      rows.push_back({method, seed, cfg.scenes, cfg.shift.magnitude, r.report.map, r.report.ap50, r.report.ap75,
                      cfg.record_timing ? r.mean_episode_ms : 0.0});
    }
  }
  return rows;
}

inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// Config echo line followed by the fixed column header and one line per row.
inline void write_csv(std::ostream& os, const RunConfig& cfg, const std::vector<ResultRow>& rows) {
  os << "# config: " << to_json(cfg).dump() << '\n';
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << method_name(r.method) << ',' << r.base_seed << ',' << r.n_scenes << ',' << format_double(r.shift_magnitude, 3)
       << ',' << format_double(r.map) << ',' << format_double(r.ap50) << ',' << format_double(r.ap75) << ','
       << format_double(r.mean_episode_ms, 3) << '\n';
  }
}

enum class SweepParam { theta, gamma, lambda, rho, top_m };

inline SweepParam parse_sweep_param(const std::string& name) {
  if (name == "theta") return SweepParam::theta;
  if (name == "gamma") return SweepParam::gamma;
  if (name == "lambda") return SweepParam::lambda;
  if (name == "rho") return SweepParam::rho;
  if (name == "top_m") return SweepParam::top_m;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected theta, gamma, lambda, rho or top_m)");
}

inline std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::theta: return "theta";
    case SweepParam::gamma: return "gamma";
    case SweepParam::lambda: return "lambda";
    case SweepParam::rho: return "rho";
    case SweepParam::top_m: return "top_m";
  }
  return "?";
}

inline EpisodeConfig with_param(EpisodeConfig cfg, SweepParam p, double value) {
  switch (p) {
    case SweepParam::theta: cfg.theta = value; break;
    case SweepParam::gamma: cfg.gamma = value; break;
    case SweepParam::lambda: cfg.lambda = value; break;
    case SweepParam::rho: cfg.rho = value; break;
    case SweepParam::top_m:
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("top_m grid values must be integers >= 1");
      cfg.top_m = static_cast<std::size_t>(value);
      break;
  }
  cfg.validate();
  return cfg;
}

struct SweepRow {
  std::string method;
  double value = 0.0;
  double map = 0.0;  // means over seeds
  double ap50 = 0.0;
  double ap75 = 0.0;
};

inline constexpr const char* kSweepHeader = "param,value,method,seeds,n_scenes,mAP,AP50,AP75";

/// One bench run per grid value for every configured method, with all other
/// settings fixed. Each row averages the per-seed metrics.
inline std::vector<SweepRow> run_sweep(const RunConfig& base, SweepParam param, const std::vector<double>& grid) {
  base.validate();
  if (grid.empty()) throw ConfigError("sweep grid must not be empty");
  std::vector<SweepRow> rows;
  for (double value : grid) {
    RunConfig cfg = base;
    cfg.episode = with_param(base.episode, param, value);
    const auto bench = run_bench(cfg);
    for (Method m : cfg.methods) {
      SweepRow row{std::string(method_name(m)), value, 0.0, 0.0, 0.0};
      int n = 0;
      for (const auto& r : bench) {
        if (r.method != m) continue;
        row.map += r.map;
        row.ap50 += r.ap50;
        row.ap75 += r.ap75;
        ++n;
      }
      row.map /= n;
      row.ap50 /= n;
      row.ap75 /= n;
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const RunConfig& cfg, SweepParam param, const std::vector<SweepRow>& rows) {
  os << "# config: " << to_json(cfg).dump() << '\n';
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    os << sweep_param_name(param) << ',' << format_double(r.value, 4) << ',' << r.method << ',' << cfg.seeds << ','
       << cfg.scenes << ',' << format_double(r.map) << ',' << format_double(r.ap50) << ',' << format_double(r.ap75)
       << '\n';
  }
}

}  // namespace vlodtta
