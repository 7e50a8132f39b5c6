#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "vlodtta/adapter.hpp"
#include "vlodtta/errors.hpp"
#include "vlodtta/linalg.hpp"
#include "vlodtta/proposals.hpp"
#include "vlodtta/scoring.hpp"

namespace vlodtta {

/// Deliberate backward-formula defects, used to confirm that the
/// finite-difference checker notices a wrong derivative.
enum class GradientFault {
  none,
  normalize_rows_skips_projection,
  entropy_drops_kappa,
};

/// Reverse-mode tape over the fixed primitive set needed by the adaptation
/// objective. Every node stores its forward value; backward() walks the nodes
/// in reverse and returns the adjoint of each.
class Tape {
 public:
  using Node = std::size_t;

  enum class Op {
    constant,
    parameter,
    matmul,     // a * b
    matmul_bt,  // a * b^T
    add,
    add_row,    // a + broadcast of the 1 x c row b
    gelu,
    normalize_rows,
    convex,           // s * a + (1 - s) * b
    softmax_entropy,  // per-row entropy of softmax(s * a), N x 1
    weighted_mean,    // sum(w * a) / sum(w), 1 x 1
  };

  Node constant(Matrix value) { return push({Op::constant, 0, 0, 0.0, {}, std::move(value)}); }
  Node parameter(Matrix value) { return push({Op::parameter, 0, 0, 0.0, {}, std::move(value)}); }

  Node matmul(Node a, Node b) { return record(Op::matmul, a, b); }
  Node matmul_bt(Node a, Node b) { return record(Op::matmul_bt, a, b); }
  Node add(Node a, Node b) { return record(Op::add, a, b); }
  Node add_row(Node a, Node row) { return record(Op::add_row, a, row); }
  Node gelu(Node a) { return record(Op::gelu, a, a); }
  Node normalize_rows(Node a) { return record(Op::normalize_rows, a, a); }
  Node convex(Node a, Node b, double weight) { return record(Op::convex, a, b, weight); }
  Node softmax_entropy(Node scores, double kappa) { return record(Op::softmax_entropy, scores, scores, kappa); }
  Node weighted_mean(Node values, Vector weights) {
    return record(Op::weighted_mean, values, values, 0.0, std::move(weights));
  }

  const Matrix& value(Node n) const { return nodes_.at(n).value; }
  Op op(Node n) const { return nodes_.at(n).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Recomputes every derived node from the recorded leaves and returns the
  /// value of `output`. Uses the same kernels as recording, so the result is
  /// bit-identical to value(output).
  Matrix replay(Node output) const {
    std::vector<Matrix> values(nodes_.size());
    for (Node i = 0; i <= output; ++i) {
      const Record& r = nodes_[i];
      values[i] = is_leaf(r.op) ? r.value : evaluate(r, values);
    }
    return values[output];
  }

  /// Adjoint of every node with respect to the scalar node `output`.
  std::vector<Matrix> backward(Node output, GradientFault fault = GradientFault::none) const {
    detail::require(value(output).size() == 1, "backward needs a scalar output");
    std::vector<Matrix> adj(nodes_.size());
    for (Node i = 0; i <= output; ++i) adj[i] = Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
    adj[output](0, 0) = 1.0;

    for (Node i = output + 1; i-- > 0;) {
      const Record& r = nodes_[i];
      const Matrix& g = adj[i];
      switch (r.op) {
        case Op::constant:
        case Op::parameter:
          break;
        case Op::matmul:
          adj[r.a] += g * value(r.b).transpose();
          adj[r.b] += value(r.a).transpose() * g;
          break;
        case Op::matmul_bt:
          adj[r.a] += g * value(r.b);
          adj[r.b] += g.transpose() * value(r.a);
          break;
        case Op::add:
          adj[r.a] += g;
          adj[r.b] += g;
          break;
        case Op::add_row:
          adj[r.a] += g;
          adj[r.b] += g.colwise().sum();
          break;
        case Op::gelu:
          adj[r.a] += (g.array() * value(r.a).unaryExpr([](double x) { return gelu_derivative(x); }).array()).matrix();
          break;
        case Op::normalize_rows: {
          // dx = (I - y y^T) dy / |x|
          const Matrix& x = value(r.a);
          const Matrix& y = r.value;
          for (Eigen::Index row = 0; row < x.rows(); ++row) {
            const double norm = x.row(row).norm();
            if (fault == GradientFault::normalize_rows_skips_projection) {
              adj[r.a].row(row) += g.row(row) / norm;
            } else {
              adj[r.a].row(row) += (g.row(row) - y.row(row) * y.row(row).dot(g.row(row))) / norm;
            }
          }
          break;
        }
        case Op::convex:
          adj[r.a] += r.scalar * g;
          adj[r.b] += (1.0 - r.scalar) * g;
          break;
        case Op::softmax_entropy: {
          // dH/ds_j = -kappa p_j (ln p_j + H)
          const double kappa = fault == GradientFault::entropy_drops_kappa ? 1.0 : r.scalar;
          const Matrix& s = value(r.a);
          for (Eigen::Index row = 0; row < s.rows(); ++row) {
            const RowVector logp = log_softmax(s.row(row), r.scalar);
            const RowVector p = logp.array().exp();
            const double h = -(p.array() * logp.array()).sum();
            adj[r.a].row(row) += g(row, 0) * (-kappa * p.array() * (logp.array() + h)).matrix();
          }
          break;
        }
        case Op::weighted_mean:
          adj[r.a] += (g(0, 0) / r.weights.sum()) * r.weights;
          break;
      }
    }
    return adj;
  }

  static RowVector log_softmax(const RowVector& scores, double kappa) {
    const RowVector logits = kappa * scores;
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
  }

 private:
  struct Record {
    Op op;
    Node a = 0;
    Node b = 0;
    double scalar = 0.0;
    Vector weights;
    Matrix value;
  };

  static bool is_leaf(Op op) { return op == Op::constant || op == Op::parameter; }

  Node push(Record r) {
    nodes_.push_back(std::move(r));
    return nodes_.size() - 1;
  }

  Node record(Op op, Node a, Node b, double scalar = 0.0, Vector weights = {}) {
    detail::require(a < nodes_.size() && b < nodes_.size(), "tape: operand is not recorded");
    Record r{op, a, b, scalar, std::move(weights), {}};
    r.value = evaluate_with(r, [this](Node n) -> const Matrix& { return nodes_[n].value; });
    return push(std::move(r));
  }

  Matrix evaluate(const Record& r, const std::vector<Matrix>& values) const {
    return evaluate_with(r, [&values](Node n) -> const Matrix& { return values[n]; });
  }

  template <typename Lookup>
  static Matrix evaluate_with(const Record& r, Lookup&& at) {
    const Matrix& a = at(r.a);
    const Matrix& b = at(r.b);
    switch (r.op) {
      case Op::constant:
      case Op::parameter:
        return r.value;
      case Op::matmul:
        detail::require(a.cols() == b.rows(), "tape matmul: inner dimensions differ");
        return a * b;
      case Op::matmul_bt:
        detail::require(a.cols() == b.cols(), "tape matmul_bt: inner dimensions differ");
        return a * b.transpose();
      case Op::add:
        detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "tape add: shapes differ");
        return a + b;
      case Op::add_row:
        detail::require(b.rows() == 1 && a.cols() == b.cols(), "tape add_row: bias must be 1 x cols");
        return a.rowwise() + RowVector(b.row(0));
      case Op::gelu:
        return a.unaryExpr([](double x) { return vlodtta::gelu(x); });
      case Op::normalize_rows:
        return vlodtta::normalize_rows(a);
      case Op::convex:
        return fuse(a, b, r.scalar);
      case Op::softmax_entropy: {
        Matrix h(a.rows(), 1);
        for (Eigen::Index row = 0; row < a.rows(); ++row) {
          const RowVector logp = log_softmax(a.row(row), r.scalar);
          h(row, 0) = -(logp.array().exp() * logp.array()).sum();
        }
        return h;
      }
      case Op::weighted_mean: {
        detail::require(a.cols() == 1 && a.rows() == r.weights.size(), "tape weighted_mean: shape");
        const double total = r.weights.sum();
        if (!(total > 0.0)) throw DegenerateWeights("cluster weights must have a positive sum");
        Matrix out(1, 1);
        out(0, 0) = r.weights.dot(a.col(0)) / total;
        return out;
      }
    }
    return {};
  }

  std::vector<Record> nodes_;
};

/// Quantities held fixed while differentiating one episode: cluster weights
/// (aligned with `top_m`), prompt selections and the top-M index list.
struct ObjectiveConstants {
  Vector weights;
  SelectionSets selections;
  double lambda = 0.3;
  double kappa = 20.0;
  std::vector<std::size_t> top_m;
};

struct Gradients {
  AdapterParams phi;
  RowVector delta;
};

struct Objective {
  double loss = 0.0;
  Tape tape;
  struct {
    Tape::Node w_down, b_down, w_up, b_up, delta, features, fused, loss;
  } nodes{};
};

/// IoU-weighted entropy of the fused posterior over the top-M proposals,
/// recorded on a tape with the adapter parameters and residual as leaves.
inline Objective forward_objective(const ProposalSet& proposals, const PromptPool& pool, const AdapterParams& phi,
                                   const RowVector& delta, const ObjectiveConstants& c) {
  detail::require(c.weights.size() == static_cast<Eigen::Index>(c.top_m.size()),
                  "one cluster weight per top-M proposal");
  detail::require(pool.dim() == proposals.dim() && pool.classes == proposals.classes(),
                  "proposals and prompt pool disagree on d or K");
  Vector weights = Vector::Zero(proposals.size());
  for (std::size_t j = 0; j < c.top_m.size(); ++j) {
    detail::require(c.top_m[j] < static_cast<std::size_t>(proposals.size()), "top-M index out of range");
    weights(static_cast<Eigen::Index>(c.top_m[j])) = c.weights(static_cast<Eigen::Index>(j));
  }

  Objective obj;
  Tape& t = obj.tape;
  auto& n = obj.nodes;
  const Tape::Node v = t.constant(proposals.features);
  n.w_down = t.parameter(phi.w_down);
  n.b_down = t.parameter(Matrix(phi.b_down));
  n.w_up = t.parameter(phi.w_up);
  n.b_up = t.parameter(Matrix(phi.b_up));
  const Tape::Node hidden = t.gelu(t.add_row(t.matmul(v, n.w_down), n.b_down));
  n.features = t.add_row(t.add(v, t.matmul(hidden, n.w_up)), n.b_up);
  const Tape::Node v_hat = t.normalize_rows(n.features);

  const Tape::Node t_hat = t.constant(normalize_rows(proposals.class_embeddings));
  const Tape::Node detector = t.matmul_bt(v_hat, t_hat);

  n.delta = t.parameter(Matrix(delta));
  const Tape::Node e_hat = t.normalize_rows(t.add_row(t.constant(pool.embeddings), n.delta));
  const Tape::Node z = t.matmul_bt(v_hat, e_hat);
  const Tape::Node z_tilde = t.matmul(z, t.constant(selection_matrix(c.selections, pool.classes, pool.prompts)));

  n.fused = t.convex(z_tilde, detector, c.lambda);
  n.loss = t.weighted_mean(t.softmax_entropy(n.fused, c.kappa), std::move(weights));
  obj.loss = t.value(n.loss)(0, 0);
  return obj;
}

inline Objective forward_objective(const ProposalSet& proposals, const PromptPool& pool, const AdaptState& state,
                                   const ObjectiveConstants& c) {
  return forward_objective(proposals, pool, state.phi, state.delta, c);
}

inline Gradients backward(const Objective& obj, GradientFault fault = GradientFault::none) {
  const auto adj = obj.tape.backward(obj.nodes.loss, fault);
  const auto& n = obj.nodes;
  Gradients g;
  const Matrix& w_down = obj.tape.value(n.w_down);
  g.phi.reduction = static_cast<int>(w_down.rows() / std::max<Eigen::Index>(1, w_down.cols()));
  g.phi.w_down = adj[n.w_down];
  g.phi.b_down = adj[n.b_down].row(0);
  g.phi.w_up = adj[n.w_up];
  g.phi.b_up = adj[n.b_up].row(0);
  g.delta = adj[n.delta].row(0);
  return g;
}

/// Visits every scalar coordinate of (phi, delta) in a fixed order; the
/// callback sees the group name ("phi" or "delta") and a mutable reference.
template <typename Fn>
void for_each_coordinate(AdapterParams& phi, RowVector& delta, Fn&& fn) {
  for (double& x : phi.w_down.reshaped()) fn("phi", x);
  for (double& x : phi.b_down) fn("phi", x);
  for (double& x : phi.w_up.reshaped()) fn("phi", x);
  for (double& x : phi.b_up) fn("phi", x);
  for (double& x : delta) fn("delta", x);
}

struct FdReport {
  double max_rel_error = 0.0;        // over all coordinates
  double max_rel_error_phi = 0.0;
  double max_rel_error_delta = 0.0;
  std::size_t coordinates = 0;
};

/// Central-difference check of backward() on every coordinate of (phi, delta):
/// error = |analytic - numeric| / max(1, |numeric|).
inline FdReport fd_check(const ProposalSet& proposals, const PromptPool& pool, const AdapterParams& phi,
                         const RowVector& delta, const ObjectiveConstants& c, double eps,
                         GradientFault fault = GradientFault::none) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ConfigError("fd_check eps must lie in [1e-7, 1e-3]");
  Gradients analytic = backward(forward_objective(proposals, pool, phi, delta, c), fault);
  std::vector<double> flat;
  for_each_coordinate(analytic.phi, analytic.delta, [&](const char*, double& x) { flat.push_back(x); });

  AdapterParams p = phi;
  RowVector d = delta;
  FdReport report;
  std::size_t idx = 0;
  for_each_coordinate(p, d, [&](const char* group, double& x) {
    const double saved = x;
    x = saved + eps;
    const double up = forward_objective(proposals, pool, p, d, c).loss;
    x = saved - eps;
    const double down = forward_objective(proposals, pool, p, d, c).loss;
    x = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(flat[idx++] - numeric) / std::max(1.0, std::abs(numeric));
    report.max_rel_error = std::max(report.max_rel_error, err);
    double& group_max = group[0] == 'p' ? report.max_rel_error_phi : report.max_rel_error_delta;
    group_max = std::max(group_max, err);
    ++report.coordinates;
  });
  return report;
}

}  // namespace vlodtta
