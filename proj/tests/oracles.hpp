// Test-only oracles, independent of the implementation paths they check.
#ifndef PLAN2VEC_TESTS_ORACLES_HPP
#define PLAN2VEC_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "plan2vec/rng.hpp"
#include "plan2vec/tensor.hpp"
#include "plan2vec/transition_graph.hpp"

namespace testutil {

// Exhaustive enumeration of all simple paths; the shortest-path oracle.
inline std::optional<double> brute_force_shortest(const plan2vec::TransitionGraph& g, int s,
                                                  int t) {
  std::vector<uint8_t> on_path(size_t(g.n_vertices), 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, double)> dfs = [&](int v, double cost) {
    if (v == t) {
      best = std::min(best, cost);
      return;
    }
    on_path[size_t(v)] = 1;
    for (const auto& e : g.out(v)) {
      if (on_path[e.to]) continue;
      dfs(int(e.to), cost + double(e.weight));
    }
    on_path[size_t(v)] = 0;
  };
  dfs(s, 0.0);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

// Directed random graph with weights on the 1/1024 grid (exact summation).
inline plan2vec::TransitionGraph random_graph(int n, int m_edges, plan2vec::Rng& rng) {
  plan2vec::TransitionGraph g;
  g.n_vertices = n;
  g.adj.resize(size_t(n));
  int added = 0, guard = 0;
  while (added < m_edges && guard < m_edges * 50) {
    ++guard;
    int u = rng.index(n), v = rng.index(n);
    if (u == v) continue;
    if (g.edge_weight(u, v)) continue;
    float w = float(double(1 + rng.below(1535)) / 1024.0);  // (0, 1.5]
    auto& edges = g.adj[size_t(u)];
    edges.push_back(plan2vec::Edge{uint32_t(v), w, plan2vec::EdgeOrigin::Inferred});
    std::sort(edges.begin(), edges.end(),
              [](const plan2vec::Edge& a, const plan2vec::Edge& b) { return a.to < b.to; });
    ++g.n_inferred_edges;
    ++added;
  }
  return g;
}

// Weight-1 chain 0 -> 1 -> ... -> n-1.
inline plan2vec::TransitionGraph chain_graph(int n, bool bidirectional = false) {
  plan2vec::TransitionGraph g;
  g.n_vertices = n;
  g.adj.resize(size_t(n));
  for (int v = 0; v + 1 < n; ++v) {
    g.adj[size_t(v)].push_back(plan2vec::Edge{uint32_t(v + 1), 1.0f,
                                              plan2vec::EdgeOrigin::Dataset});
    ++g.n_dataset_edges;
    if (bidirectional) {
      g.adj[size_t(v + 1)].push_back(plan2vec::Edge{uint32_t(v), 1.0f,
                                                    plan2vec::EdgeOrigin::Dataset});
      ++g.n_dataset_edges;
    }
  }
  for (auto& edges : g.adj)
    std::sort(edges.begin(), edges.end(),
              [](const plan2vec::Edge& a, const plan2vec::Edge& b) { return a.to < b.to; });
  return g;
}

// Central finite differences against the tape gradient in double precision.
// Builds the graph through `forward` (inputs are leaves), then probes random
// input coordinates. Relative error floor 1 handles near-zero gradients.
struct FdReport {
  int failures = 0;
  double worst = 0;
};

template <class Forward>
FdReport fd_check(std::vector<plan2vec::ad::Mat<double>> inputs, Forward forward, int probes,
                  plan2vec::Rng& rng, double tol = 1e-3, double h = 1e-3) {
  using plan2vec::ad::Mat;
  using plan2vec::ad::Tape;

  Tape<double> tape;
  std::vector<typename Tape<double>::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.leaf(m));
  auto loss = forward(tape, vars);
  tape.backward(loss);

  auto eval = [&](const std::vector<Mat<double>>& xs) {
    Tape<double> t2;
    std::vector<typename Tape<double>::Var> vs;
    for (const auto& m : xs) vs.push_back(t2.leaf(m));
    auto l = forward(t2, vs);
    return t2.value(l)(0, 0);
  };

  FdReport report;
  for (int probe = 0; probe < probes; ++probe) {
    int which = rng.index(int(inputs.size()));
    const auto& m = inputs[size_t(which)];
    if (m.size() == 0) continue;
    Eigen::Index at = Eigen::Index(rng.below(uint64_t(m.size())));
    auto plus = inputs, minus = inputs;
    plus[size_t(which)].data()[at] += h;
    minus[size_t(which)].data()[at] -= h;
    double fd = (eval(plus) - eval(minus)) / (2 * h);
    double an = tape.grad(vars[size_t(which)]).data()[at];
    double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
    report.worst = std::max(report.worst, err);
    if (err >= tol) ++report.failures;
  }
  return report;
}

inline plan2vec::ad::Mat<double> random_mat(int rows, int cols, plan2vec::Rng& rng,
                                            double lo = -2.0, double hi = 2.0) {
  plan2vec::ad::Mat<double> m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Random matrix with every entry bounded away from zero (for norms and relu).
inline plan2vec::ad::Mat<double> random_mat_away_from(int rows, int cols, plan2vec::Rng& rng,
                                                      double min_abs, double max_abs = 2.0) {
  plan2vec::ad::Mat<double> m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      m(i, j) = sign * rng.uniform(min_abs, max_abs);
    }
  return m;
}

}  // namespace testutil

#endif
