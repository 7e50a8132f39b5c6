#pragma once

// Self-check suite behind `vlodtta check`: analytic gradients against finite
// differences, production algorithms against the naive oracles, the frozen AP
// fixtures and the algebraic reductions of the objective.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vlodtta/adapt.hpp"
#include "vlodtta/cluster.hpp"
#include "vlodtta/eval.hpp"
#include "vlodtta/fixtures/ap_three_scene.hpp"
#include "vlodtta/geometry.hpp"
#include "vlodtta/grad.hpp"
#include "vlodtta/oracles.hpp"
#include "vlodtta/random.hpp"
#include "vlodtta/scoring.hpp"

namespace vlodtta {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// A small random objective: proposals, pool, a non-trivial (phi, delta) and
/// frozen constants.
struct ObjectiveInstance {
  ProposalSet proposals;
  PromptPool pool;
  AdapterParams phi;
  RowVector delta;
  ObjectiveConstants constants;
};

struct InstanceLimits {
  int max_n = 50;
  int max_k = 5;
  int max_t = 8;
  int max_d = 16;
  int max_r = 4;
};

inline ObjectiveInstance random_objective_instance(Rng& rng, const InstanceLimits& lim = {}) {
  ObjectiveInstance x;
  const int r = rng.uniform_int(1, lim.max_r);
  const int d = r * rng.uniform_int(std::max(1, (2 + r - 1) / r), lim.max_d / r);
  const int n = rng.uniform_int(2, lim.max_n);
  const int k = rng.uniform_int(2, lim.max_k);
  const int t = rng.uniform_int(1, lim.max_t);
  const int h = d / r;

  for (int i = 0; i < n; ++i) {
    const double x1 = rng.uniform(0, 90), y1 = rng.uniform(0, 90);
    x.proposals.boxes.emplace_back(x1, y1, x1 + rng.uniform(2, 30), y1 + rng.uniform(2, 30));
  }
  auto normal = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
  };
  x.proposals.features = normal(n, d, 1.0);
  x.proposals.class_embeddings = normal(k, d, 1.0);
  x.pool = {k, t, normal(static_cast<Eigen::Index>(k) * t, d, 1.0)};
  x.phi.reduction = r;
  x.phi.w_down = normal(d, h, 1.0);
  x.phi.b_down = normal(1, h, 0.1).row(0);
  x.phi.w_up = normal(h, d, 0.3);
  x.phi.b_up = normal(1, d, 0.1).row(0);
  x.delta = normal(1, d, 0.2).row(0);

  auto& c = x.constants;
  c.lambda = rng.uniform();
  c.kappa = rng.uniform(1.0, 20.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  idx.resize(static_cast<std::size_t>(rng.uniform_int(1, n)));
  c.top_m = idx;
  c.weights.resize(static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index j = 0; j < c.weights.size(); ++j) c.weights(j) = std::pow(rng.uniform_int(1, 8), 1.1);
  const int keep = selection_size(t, rng.uniform(0.05, 1.0));
  for (int kk = 0; kk < k; ++kk) {
    std::vector<int> prompts(static_cast<std::size_t>(t));
    for (int q = 0; q < t; ++q) prompts[static_cast<std::size_t>(q)] = q;
    for (std::size_t i = prompts.size(); i > 1; --i)
      std::swap(prompts[i - 1], prompts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    prompts.resize(static_cast<std::size_t>(keep));
    c.selections.push_back(prompts);
  }
  return x;
}

/// Boxes drawn around a few anchors so that IoU graphs have real structure.
inline std::vector<Box> clustered_boxes(Rng& rng, int n) {
  const int anchors = rng.uniform_int(1, std::max(1, n / 4));
  std::vector<Box> centres;
  for (int a = 0; a < anchors; ++a) {
    const double x = rng.uniform(0, 200), y = rng.uniform(0, 200);
    centres.emplace_back(x, y, x + rng.uniform(10, 60), y + rng.uniform(10, 60));
  }
  std::vector<Box> boxes;
  for (int i = 0; i < n; ++i) {
    const Box& c = centres[static_cast<std::size_t>(rng.uniform_int(0, anchors - 1))];
    const double s = rng.uniform(0.0, 0.5);
    const double x1 = c.x1() + s * c.width() * rng.normal();
    const double y1 = c.y1() + s * c.height() * rng.normal();
    boxes.emplace_back(x1, y1, x1 + c.width() * rng.uniform(0.6, 1.4), y1 + c.height() * rng.uniform(0.6, 1.4));
  }
  return boxes;
}

namespace detail {

inline CheckResult timed(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r{name, false, "", 0.0};
  try {
    auto [ok, detail] = body();
    r.passed = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace detail

inline CheckResult check_fd_gradients(int instances = 50, std::uint64_t seed = 1) {
  return detail::timed("fd-gradients", [=] {
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      const auto x = random_objective_instance(rng);
      const FdReport r = fd_check(x.proposals, x.pool, x.phi, x.delta, x.constants, 1e-5);
      worst = std::max(worst, r.max_rel_error);
    }
    return std::pair{worst <= 1e-4, std::to_string(instances) + " instances, max rel error " + detail::fmt(worst)};
  });
}

/// A deliberately broken backward pass must be caught by the FD comparison.
inline CheckResult check_fd_sensitivity(std::uint64_t seed = 2) {
  return detail::timed("fd-detects-faults", [=] {
    Rng rng(seed);
    const auto x = random_objective_instance(rng, {12, 3, 4, 8, 2});
    std::string msg;
    bool ok = true;
    for (GradientFault f : {GradientFault::normalize_rows_skips_projection, GradientFault::entropy_drops_kappa}) {
      const double err = fd_check(x.proposals, x.pool, x.phi, x.delta, x.constants, 1e-5, f).max_rel_error;
      ok = ok && err > 1e-4;
      msg += (msg.empty() ? "" : ", ") + detail::fmt(err);
    }
    return std::pair{ok, "faulty backward errors " + msg};
  });
}

inline CheckResult check_components(int instances = 200, std::uint64_t seed = 3) {
  return detail::timed("components-vs-dfs", [=] {
    Rng rng(seed);
    const double thetas[] = {0.0, 0.3, 0.5, 0.7, 0.99};
    int bad = 0;
    for (int i = 0; i < instances; ++i) {
      const int n = rng.uniform_int(1, 100);
      const auto boxes = clustered_boxes(rng, n);
      std::vector<int> classes(static_cast<std::size_t>(n));
      const int k = rng.uniform_int(1, 6);
      for (int& c : classes) c = rng.uniform_int(0, k - 1);
      const double theta = thetas[i % 5];
      const auto got = build_class_graphs(boxes, classes, theta);
      const auto want = oracle::dfs_components(boxes, classes, theta);
      bool same = got.component_id == want;
      for (std::size_t j = 0; same && j < want.size(); ++j) {
        std::size_t size = 0;
        for (std::size_t l : want) size += l == want[j] ? 1 : 0;
        same = got.component_size[j] == size;
      }
      bad += same ? 0 : 1;
    }
    return std::pair{bad == 0, std::to_string(instances - bad) + "/" + std::to_string(instances) + " match"};
  });
}

inline CheckResult check_nms(int instances = 200, std::uint64_t seed = 4) {
  return detail::timed("nms-vs-brute-force", [=] {
    Rng rng(seed);
    int bad = 0;
    for (int i = 0; i < instances; ++i) {
      const int n = rng.uniform_int(1, 100);
      const auto boxes = clustered_boxes(rng, n);
      std::vector<Detection> dets;
      const int k = rng.uniform_int(1, 4);
      for (const Box& b : boxes)  // coarse scores so ties occur
        dets.push_back({b, rng.uniform_int(0, k - 1), rng.uniform_int(0, 20) / 20.0});
      const double thr = rng.uniform();
      const bool class_wise = i % 2 == 0;
      const auto got = nms(dets, thr, class_wise);
      const auto want = oracle::brute_force_nms(dets, thr, class_wise);
      bool same = got.size() == want.size();
      for (std::size_t j = 0; same && j < got.size(); ++j)
        same = got[j].box == want[j].box && got[j].class_id == want[j].class_id && got[j].score == want[j].score;
      bad += same ? 0 : 1;
    }
    return std::pair{bad == 0, std::to_string(instances - bad) + "/" + std::to_string(instances) + " match"};
  });
}

inline CheckResult check_ap_fixtures() {
  return detail::timed("ap-fixtures", [] {
    const double single = *average_precision({true}, 1);
    const double fp_tp = *average_precision({false, true}, 2);
    const auto images = fixtures::ap_three_scene();
    const APReport rep = evaluate(images, fixtures::kApThreeSceneClasses);
    const double dev = std::max({std::abs(rep.map - fixtures::kApThreeSceneMap),
                                 std::abs(rep.ap50 - fixtures::kApThreeSceneAp50),
                                 std::abs(rep.ap75 - fixtures::kApThreeSceneAp75)});
    const bool ok = single == 1.0 && std::abs(fp_tp - 51.0 / 101.0 * 0.5) <= 1e-9 && dev <= 1e-6;
    return std::pair{ok, "single TP " + std::to_string(single) + ", FP/TP " + std::to_string(fp_tp) +
                             ", 3-scene max deviation " + detail::fmt(dev)};
  });
}

/// Mean squared distance between unit features and one unit prompt equals
/// 2 - 2 r, with r taken from image_prompt_compat.
inline CheckResult check_cosine_euclid(int sets = 1000, std::uint64_t seed = 5) {
  return detail::timed("cosine-euclidean", [=] {
    Rng rng(seed);
    double worst = 0.0;
    for (int s = 0; s < sets; ++s) {
      const int d = rng.uniform_int(2, 64);
      const int n = rng.uniform_int(1, 50);
      Matrix v(n, d);
      for (int i = 0; i < n; ++i) v.row(i) = rng.unit_vector(d);
      const PromptPool pool{1, 1, Matrix(rng.unit_vector(d))};
      const double r = image_prompt_compat(prompt_scores(v, pool, RowVector::Zero(d)))(0, 0);
      double msd = 0.0;
      for (int i = 0; i < n; ++i) msd += (v.row(i) - pool.embeddings.row(0)).squaredNorm();
      msd /= n;
      worst = std::max(worst, std::abs(msd - (2.0 - 2.0 * r)));
    }
    return std::pair{worst <= 1e-10, std::to_string(sets) + " sets, max gap " + detail::fmt(worst)};
  });
}

/// gamma=0, theta=0, lambda=0 and rho=1 collapse to their plain counterparts.
inline CheckResult check_reductions(int instances = 50, std::uint64_t seed = 6) {
  return detail::timed("reductions", [=] {
    Rng rng(seed);
    double gamma_gap = 0.0;
    bool theta_ok = true, lambda_ok = true, rho_ok = true;
    for (int i = 0; i < instances; ++i) {
      const auto x = random_objective_instance(rng);
      const Matrix s = detector_scores(x.proposals.features, x.proposals.class_embeddings);
      const PromptScores z = prompt_scores(x.proposals.features, x.pool, RowVector::Zero(x.proposals.dim()));
      const auto sel = select_prompts(image_prompt_compat(z), 0.25);
      const Matrix g = fuse(aggregate_selected(z, sel), s, x.constants.lambda);

      const auto classes = predicted_classes(g);
      const Vector h = entropy(posterior(g, x.constants.kappa));
      const auto clusters = build_class_graphs(clustered_boxes(rng, static_cast<int>(classes.size())), classes,
                                               rng.uniform(0.1, 0.9));
      gamma_gap = std::max(gamma_gap, std::abs(iwe_loss(h, cluster_weights(clusters, 0.0)) - h.mean()));

      const auto all = build_class_graphs(x.proposals.boxes, classes, 0.0);
      std::vector<int> distinct(classes);
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      theta_ok = theta_ok && all.component_count() == distinct.size();

      lambda_ok = lambda_ok && fuse(aggregate_selected(z, sel), s, 0.0) == s;

      const Matrix agg = aggregate_selected(z, select_prompts(image_prompt_compat(z), 1.0));
      Matrix mean(s.rows(), s.cols());
      for (Eigen::Index r = 0; r < s.rows(); ++r)
        for (int k = 0; k < x.pool.classes; ++k) {
          double acc = 0.0;
          for (int t = 0; t < x.pool.prompts; ++t) acc += z(r, k, t);
          mean(r, k) = acc / x.pool.prompts;
        }
      rho_ok = rho_ok && agg == mean;
    }
    const bool ok = gamma_gap <= 1e-12 && theta_ok && lambda_ok && rho_ok;
    std::string msg = "gamma=0 gap " + detail::fmt(gamma_gap);
    msg += theta_ok ? ", theta=0 one component per class" : ", theta=0 FAILED";
    msg += lambda_ok ? ", lambda=0 exact" : ", lambda=0 FAILED";
    msg += rho_ok ? ", rho=1 exact" : ", rho=1 FAILED";
    return std::pair{ok, msg};
  });
}

inline std::vector<CheckResult> run_checks() {
  return {check_fd_gradients(), check_fd_sensitivity(), check_components(), check_nms(),
          check_ap_fixtures(),  check_cosine_euclid(),  check_reductions()};
}

}  // namespace vlodtta
