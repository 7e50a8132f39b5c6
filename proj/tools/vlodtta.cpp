// vlodtta: benchmark, inspect and self-check the adaptation engine.

#include <array>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlodtta/vlodtta.hpp"

namespace {

using namespace vlodtta;

// Writes to `path`, or to stdout when the path is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write(out);
  out.flush();
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("grid value '" + item + "' is not a number");
    grid.push_back(v);
  }
  if (grid.empty()) throw ConfigError("grid must list at least one value");
  return grid;
}

// Scene `index` of the suite for the config's first seed.
SceneDocument suite_scene(const RunConfig& cfg, int index) {
  if (index < 0 || index >= cfg.scenes)
    throw ConfigError("scene index " + std::to_string(index) + " outside the suite (0.." +
                      std::to_string(cfg.scenes - 1) + ")");
  const sim::World world = sim::gen_world(cfg.first_seed, cfg.sim);
  const sim::SceneSample s = sim::gen_scene_proposals(sim::scene_seed(cfg.first_seed, static_cast<std::uint64_t>(index)),
                                                      cfg.sim, world, cfg.shift);
  return {s.proposals, world.pool, s.ground_truth};
}

int cmd_bench(const std::string& config_path, std::string out) {
  const RunConfig cfg = load_run_config(config_path);
  if (out.empty()) out = cfg.csv_out;
  const auto rows = run_bench(cfg);
  with_output(out, [&](std::ostream& os) { write_csv(os, cfg, rows); });

  if (!out.empty() && out != "-") {
    std::map<std::string, std::array<double, 3>> sums;
    for (const auto& r : rows) {
      auto& s = sums[std::string(method_name(r.method))];
      s[0] += r.map;
      s[1] += r.ap50;
      s[2] += r.ap75;
    }
    std::printf("%-8s %8s %8s %8s  (means over %d seeds x %d scenes, shift %.2f)\n", "method", "mAP", "AP50", "AP75",
                cfg.seeds, cfg.scenes, cfg.shift.magnitude);
    for (Method m : cfg.methods) {
      const auto& s = sums[std::string(method_name(m))];
      std::printf("%-8s %8.4f %8.4f %8.4f\n", std::string(method_name(m)).c_str(), s[0] / cfg.seeds,
                  s[1] / cfg.seeds, s[2] / cfg.seeds);
    }
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_episode(const std::string& config_path, const std::string& input, int scene, std::string out) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  if (out.empty()) out = cfg.episode_out;
  const SceneDocument doc = input.empty() ? suite_scene(cfg, scene) : scene_from_json(read_json_file(input));
  const EpisodeResult r = adapt_episode(doc.proposals, doc.pool, cfg.episode);
  with_output(out, [&](std::ostream& os) { os << episode_dump(doc, r, cfg.episode, static_cast<std::size_t>(scene)).dump(1) << '\n'; });
  if (!out.empty() && out != "-")
    std::printf("loss %.6f -> %.6f, %zu clusters, %zu detections; wrote %s\n", r.trace.loss, r.trace.loss_after,
                r.trace.cluster_table.size(), r.detections.size(), out.c_str());
  return 0;
}

int cmd_export(const std::string& config_path, int scene, const std::string& out) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  const SceneDocument doc = suite_scene(cfg, scene);
  with_output(out, [&](std::ostream& os) { os << to_json(doc).dump(1) << '\n'; });
  return 0;
}

int cmd_check() {
  const auto results = run_checks();
  bool ok = true;
  double total = 0.0;
  for (const auto& r : results) {
    std::printf("%s  %-20s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    ok = ok && r.passed;
    total += r.seconds;
  }
  std::printf("%s: %zu checks in %.2fs\n", ok ? "all checks passed" : "CHECKS FAILED", results.size(), total);
  return ok ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& grid_text,
              const std::string& out) {
  const RunConfig cfg = load_run_config(config_path);
  const SweepParam p = parse_sweep_param(param);
  const auto rows = run_sweep(cfg, p, parse_grid(grid_text));
  with_output(out, [&](std::ostream& os) { write_sweep_csv(os, cfg, p, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time adaptation for vision-language detectors on synthetic suites"};
  app.require_subcommand(1);

  std::string config, out, input, param, grid;
  int scene = 0;

  auto* bench = app.add_subcommand("bench", "Run every configured method over seeds x scenes and write a CSV");
  bench->add_option("--config", config, "run config (JSON)")->required();
  bench->add_option("--out", out, "CSV path; defaults to output.csv from the config, else stdout");

  auto* episode = app.add_subcommand("episode", "Run one episode and dump everything it computed as JSON");
  episode->add_option("--config", config, "run config (JSON); defaults apply when omitted");
  episode->add_option("--scene", scene, "scene index in the suite of the first seed");
  episode->add_option("--input", input, "scene JSON to use instead of a generated scene");
  episode->add_option("--out", out, "JSON path; defaults to output.episode from the config, else stdout");

  auto* exp = app.add_subcommand("export", "Write a generated scene as proposal-set JSON");
  exp->add_option("--config", config, "run config (JSON); defaults apply when omitted");
  exp->add_option("--scene", scene, "scene index in the suite of the first seed");
  exp->add_option("--out", out, "JSON path; stdout when omitted");

  auto* check = app.add_subcommand("check", "Run the oracle and invariant checks");

  auto* sweep = app.add_subcommand("sweep", "Bench once per grid value of one hyperparameter");
  sweep->add_option("--config", config, "run config (JSON)")->required();
  sweep->add_option("--param", param, "theta, gamma, lambda, rho or top_m")->required();
  sweep->add_option("--grid", grid, "comma-separated values, e.g. 0,0.6,1.1")->required();
  sweep->add_option("--out", out, "CSV path; stdout when omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) return cmd_bench(config, out);
    if (*episode) return cmd_episode(config, input, scene, out);
    if (*exp) return cmd_export(config, scene, out);
    if (*check) return cmd_check();
    if (*sweep) return cmd_sweep(config, param, grid, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vlodtta: %s\n", e.what());
    return 2;
  }
  return 1;
}
