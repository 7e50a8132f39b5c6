#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "vlodtta/check.hpp"
#include "vlodtta/cluster.hpp"
#include "vlodtta/oracles.hpp"

using namespace vlodtta;

TEST(DisjointSet, UnitesAndCounts) {
  DisjointSet d(5);
  EXPECT_TRUE(d.unite(0, 3));
  EXPECT_TRUE(d.unite(3, 4));
  EXPECT_FALSE(d.unite(0, 4));
  EXPECT_EQ(d.find(4), d.find(0));
  EXPECT_NE(d.find(1), d.find(0));
  EXPECT_EQ(d.size_of(d.find(0)), 3u);
  EXPECT_EQ(d.size_of(d.find(2)), 1u);
}

TEST(PredictedClasses, Examples) {
  Matrix s(3, 2);
  s << 0.1, 0.9, 0.8, 0.2, 0.5, 0.5;
  EXPECT_EQ(predicted_classes(s), (std::vector<int>{1, 0, 0}));
  Matrix hot = Matrix::Zero(1, 4);
  hot(0, 2) = 1.0;
  EXPECT_EQ(predicted_classes(hot), (std::vector<int>{2}));
}

TEST(BuildClassGraphs, Examples) {
  const std::vector<Box> same{Box(0, 0, 1, 1), Box(10, 10, 11, 11), Box(20, 0, 30, 5)};
  const std::vector<int> zeros(3, 0);
  const auto all = build_class_graphs(same, zeros, 0.0);
  EXPECT_EQ(all.component_count(), 1u);
  EXPECT_EQ(all.component_size[2], 3u);

  const std::vector<Box> apart{Box(0, 0, 1, 1), Box(5, 5, 6, 6)};
  const auto two = build_class_graphs(apart, std::vector<int>{0, 0}, 0.5);
  EXPECT_EQ(two.component_count(), 2u);
  EXPECT_EQ(two.component_id, (std::vector<std::size_t>{0, 1}));

  // a-b and b-c overlap at IoU 0.6, a-c only at 1/3
  const std::vector<Box> chain{Box(0, 0, 16, 1), Box(4, 0, 20, 1), Box(8, 0, 24, 1)};
  ASSERT_NEAR(iou(chain[0], chain[1]), 0.6, 1e-12);
  ASSERT_NEAR(iou(chain[1], chain[2]), 0.6, 1e-12);
  ASSERT_NEAR(iou(chain[0], chain[2]), 1.0 / 3.0, 1e-12);
  const auto c = build_class_graphs(chain, zeros, 0.5);
  EXPECT_EQ(c.component_count(), 1u);
  EXPECT_EQ(c.component_size[0], 3u);
  EXPECT_EQ(oracle::dfs_components(chain, zeros, 0.5), (std::vector<std::size_t>{0, 0, 0}));
}

TEST(BuildClassGraphs, RejectsBadInput) {
  const std::vector<Box> b{Box(0, 0, 1, 1)};
  EXPECT_THROW(build_class_graphs(b, std::vector<int>{0, 1}, 0.5), ShapeMismatch);
  EXPECT_THROW(build_class_graphs(b, std::vector<int>{0}, 1.5), ConfigError);
}

TEST(BuildClassGraphs, MatchesDfsAndKeepsClassesApart) {
  Rng rng(31);
  const double thetas[] = {0.0, 0.3, 0.5, 0.7, 0.99};
  for (int i = 0; i < 250; ++i) {
    const int n = rng.uniform_int(1, 100);
    const auto boxes = clustered_boxes(rng, n);
    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int& c : classes) c = rng.uniform_int(0, 5);
    const double theta = thetas[i % 5];
    const auto got = build_class_graphs(boxes, classes, theta);
    EXPECT_EQ(got.component_id, oracle::dfs_components(boxes, classes, theta));
    std::map<std::size_t, std::size_t> count;
    for (std::size_t id : got.component_id) ++count[id];
    for (std::size_t j = 0; j < got.size(); ++j) {
      EXPECT_EQ(got.component_size[j], count[got.component_id[j]]);
      EXPECT_EQ(classes[j], classes[got.component_id[j]]);
      EXPECT_LE(got.component_id[j], j);
    }
  }
}

TEST(BuildClassGraphs, RaisingThetaRefinesThePartition) {
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    const int n = rng.uniform_int(2, 60);
    const auto boxes = clustered_boxes(rng, n);
    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int& c : classes) c = rng.uniform_int(0, 2);
    const double lo = rng.uniform(), hi = rng.uniform(lo, 1.0);
    const auto coarse = build_class_graphs(boxes, classes, lo);
    const auto fine = build_class_graphs(boxes, classes, hi);
    for (std::size_t a = 0; a < fine.size(); ++a)
      for (std::size_t b = 0; b < fine.size(); ++b)
        if (fine.component_id[a] == fine.component_id[b]) {
          EXPECT_EQ(coarse.component_id[a], coarse.component_id[b]);
        }
  }
}

TEST(ClusterWeights, Examples) {
  ClusterAssignment a;
  a.predicted_class = {0, 0, 0, 0, 1};
  a.component_id = {0, 0, 0, 0, 4};
  a.component_size = {4, 4, 4, 4, 1};
  EXPECT_EQ(cluster_weights(a, 0.0), Vector::Ones(5));
  EXPECT_NEAR(cluster_weights(a, 1.1)(0), 4.59479341998814, 1e-12);
  for (double g : {0.3, 1.1, 2.5}) EXPECT_EQ(cluster_weights(a, g)(4), 1.0);
  EXPECT_THROW(cluster_weights(a, -1.0), ConfigError);
}

TEST(IweLoss, Examples) {
  Vector h(2), w(2);
  h << 0.2, 0.6;
  w << 1, 3;
  EXPECT_NEAR(iwe_loss(h, w), 0.5, 1e-15);
  EXPECT_NEAR(iwe_loss(h, Vector::Constant(2, 7.0)), h.mean(), 1e-15);
  EXPECT_EQ(iwe_loss(h.head(1), w.head(1)), 0.2);
  EXPECT_THROW(iwe_loss(h, Vector::Zero(2)), DegenerateWeights);
}

TEST(IweLoss, GammaZeroAndScaleInvariance) {
  Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    const int n = rng.uniform_int(1, 50);
    Vector h(n), w(n);
    for (int j = 0; j < n; ++j) {
      h(j) = rng.uniform(0, 2);
      w(j) = std::pow(rng.uniform_int(1, 9), 1.1);
    }
    EXPECT_NEAR(iwe_loss(h, Vector::Ones(n)), h.mean(), 1e-12);
    EXPECT_NEAR(iwe_loss(h, rng.uniform(1e-3, 1e3) * w), iwe_loss(h, w), 1e-12);
  }
}
