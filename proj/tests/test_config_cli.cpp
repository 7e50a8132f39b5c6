#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "vlodtta/bench.hpp"
#include "vlodtta/config.hpp"
#include "vlodtta/serialize.hpp"

using namespace vlodtta;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.seeds = 2;
  c.scenes = 3;
  return c;
}

std::string csv(const RunConfig& c) {
  std::ostringstream os;
  write_csv(os, c, run_bench(c));
  return os.str();
}

}  // namespace

TEST(RunConfig, RoundTripIsIdempotent) {
  RunConfig c;
  c.episode.gamma = 0.6;
  c.sim.background = 12;
  c.shift.magnitude = 0.3;
  c.methods = {Method::vlodtta, Method::zero_shot};
  c.csv_out = "out.csv";
  const json once = to_json(c);
  const RunConfig parsed = parse_run_config(once);
  EXPECT_EQ(parsed, c);
  EXPECT_EQ(to_json(parsed).dump(), once.dump());
  EXPECT_EQ(parse_run_config(json::object()), RunConfig{});
}

TEST(RunConfig, RejectsUnknownKeysBadTypesAndBadValues) {
  EXPECT_THROW(parse_run_config(json{{"seedz", 3}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"episode", {{"gama", 1.0}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"seeds", "many"}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"seeds", 0}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"first_seed", -1}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"methods", {"zs", "tent"}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"episode", {{"rho", 0.0}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"episode", {{"reduction", 0}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"output", {{"png", "x"}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json::array()), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST(Bench, SmallestRunGivesOneRow) {
  RunConfig c;
  c.seeds = 1;
  c.scenes = 5;
  c.methods = {Method::zero_shot};
  const auto rows = run_bench(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].method, Method::zero_shot);
  EXPECT_EQ(rows[0].n_scenes, 5);
  EXPECT_GT(rows[0].map, 0.0);
}

TEST(Bench, CsvIsByteIdenticalAcrossRunsAndThreadCounts) {
  RunConfig c = small_config();
  const std::string a = csv(c);
  EXPECT_EQ(a, csv(c));
  RunConfig threaded = c;
  threaded.threads = 3;
  const std::string b = csv(threaded);
  // only the echoed config differs
  EXPECT_EQ(a.substr(a.find('\n')), b.substr(b.find('\n')));
}

TEST(Bench, CsvLayout) {
  RunConfig c = small_config();
  std::istringstream in(csv(c));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config: {", 0), 0u);
  EXPECT_EQ(parse_run_config(json::parse(line.substr(10))), c);
  std::getline(in, line);
  EXPECT_EQ(line, "method,base_seed,n_scenes,shift_magnitude,mAP,AP50,AP75,mean_episode_ms");
  std::set<std::string> keys;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    keys.insert(line.substr(0, line.find(',', line.find(',') + 1)));
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(rows, 8);
  EXPECT_EQ(keys.size(), 8u);
}

TEST(Bench, TimingIsRecordedOnlyWhenAsked) {
  RunConfig c = small_config();
  c.methods = {Method::vlodtta};
  for (const auto& r : run_bench(c)) EXPECT_EQ(r.mean_episode_ms, 0.0);
  c.record_timing = true;
  for (const auto& r : run_bench(c)) EXPECT_GT(r.mean_episode_ms, 0.0);
}

TEST(Sweep, GammaZeroAtLambdaZeroIsTheEntropyBaseline) {
  RunConfig c = small_config();
  c.episode.lambda = 0.0;
  c.methods = {Method::vlodtta, Method::entropy_adapter};
  const auto rows = run_sweep(c, SweepParam::gamma, {0.0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].map, rows[1].map);
  EXPECT_EQ(rows[0].ap50, rows[1].ap50);
  EXPECT_EQ(rows[0].ap75, rows[1].ap75);
}

TEST(Sweep, LambdaZeroEqualsANoFusionRun) {
  RunConfig c = small_config();
  c.methods = {Method::vlodtta};
  const auto swept = run_sweep(c, SweepParam::lambda, {0.0});
  c.episode.lambda = 0.0;
  const auto direct = run_bench(c);
  EXPECT_EQ(swept[0].map, (direct[0].map + direct[1].map) / 2.0);
  EXPECT_EQ(swept[0].ap50, (direct[0].ap50 + direct[1].ap50) / 2.0);
}

TEST(Sweep, ParametersAndGridValidation) {
  for (const char* name : {"theta", "gamma", "lambda", "rho", "top_m"})
    EXPECT_EQ(sweep_param_name(parse_sweep_param(name)), name);
  EXPECT_THROW(parse_sweep_param("kappa"), ConfigError);
  EXPECT_THROW(with_param({}, SweepParam::theta, 1.5), ConfigError);
  EXPECT_THROW(with_param({}, SweepParam::top_m, 2.5), ConfigError);
  EXPECT_THROW(run_sweep(small_config(), SweepParam::rho, {}), ConfigError);
  std::ostringstream os;
  const RunConfig c = small_config();
  write_sweep_csv(os, c, SweepParam::theta, {{"vlodtta", 0.5, 0.25, 0.5, 0.125}});
  EXPECT_NE(os.str().find("param,value,method,seeds,n_scenes,mAP,AP50,AP75\ntheta,0.5000,vlodtta,2,3,0.250000,"
                          "0.500000,0.125000\n"),
            std::string::npos);
}

TEST(Serialize, SceneRoundTripIsExact) {
  const sim::SimConfig c;
  const auto w = sim::gen_world(3, c);
  const auto s = sim::gen_scene_proposals(5, c, w, {});
  const SceneDocument doc{s.proposals, w.pool, s.ground_truth};
  const SceneDocument back = scene_from_json(json::parse(to_json(doc).dump()));
  EXPECT_EQ(back.proposals.boxes, doc.proposals.boxes);
  EXPECT_EQ(back.proposals.features, doc.proposals.features);
  EXPECT_EQ(back.proposals.class_embeddings, doc.proposals.class_embeddings);
  EXPECT_EQ(back.pool.embeddings, doc.pool.embeddings);
  EXPECT_EQ(back.ground_truth, doc.ground_truth);
}

TEST(Serialize, RejectsMalformedScenes) {
  const sim::SimConfig c;
  const auto w = sim::gen_world(3, c);
  const auto s = sim::gen_scene_proposals(5, c, w, {});
  const json good = to_json(SceneDocument{s.proposals, w.pool, s.ground_truth});
  auto broken = [&](auto mutate) {
    json j = good;
    mutate(j);
    return j;
  };
  EXPECT_THROW(scene_from_json(broken([](json& j) { j.erase("features"); })), ConfigError);
  EXPECT_THROW(scene_from_json(broken([](json& j) { j["d"] = 31; })), ConfigError);
  EXPECT_THROW(scene_from_json(broken([](json& j) { j["boxes"][0] = {5, 5, 5, 9}; })), InvalidBox);
  EXPECT_THROW(scene_from_json(broken([](json& j) { j["boxes"].erase(0); })), ConfigError);
  EXPECT_THROW(scene_from_json(broken([](json& j) { j["prompt_pool"][1].erase(0); })), ConfigError);
  EXPECT_THROW(scene_from_json(broken([](json& j) { j["gt"][0]["class_id"] = 6; })), ConfigError);
}

TEST(EpisodeDump, LrZeroKeepsScoresAndDistractorsFormTheirOwnClusters) {
  RunConfig c;
  c.sim.distractor_prob = 1.0;
  c.sim.min_objects = 1;
  c.sim.max_objects = 1;
  c.shift.magnitude = 0.0;
  c.episode.lr = 0.0;
  const auto w = sim::gen_world(11, c.sim);
  const auto s = sim::gen_scene_proposals(17, c.sim, w, c.shift);
  const SceneDocument doc{s.proposals, w.pool, s.ground_truth};
  const auto r = adapt_episode(doc.proposals, doc.pool, c.episode);
  const json dump = json::parse(episode_dump(doc, r, c.episode, 0).dump());
  EXPECT_EQ(dump["fused_before"], dump["fused_after"]);
  EXPECT_EQ(dump["cluster_count"].get<std::size_t>(), dump["clusters"].size());

  // clusters of two or more proposals around the object: one for the object,
  // at least one for the adjacent wrong-class distractor
  std::set<int> classes;
  int multi = 0;
  for (const auto& row : dump["clusters"]) {
    const auto anchor = row["anchor"].get<std::size_t>();
    if (s.owner[anchor] != 0 || row["size"].get<std::size_t>() < 2) continue;
    ++multi;
    classes.insert(row["class_id"].get<int>());
  }
  EXPECT_GE(multi, 2);
  EXPECT_GE(classes.size(), 2u);
  EXPECT_TRUE(classes.count(s.ground_truth[0].class_id));
}
