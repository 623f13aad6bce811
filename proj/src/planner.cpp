#include "plan2vec/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace plan2vec {

namespace {

using QueueEntry = std::pair<double, int>;  // (key, vertex); ties -> smaller id
using MinQueue =
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>>;

std::vector<int> trace_parents(const std::vector<int>& parent, int target) {
  std::vector<int> path;
  for (int v = target; v != -1; v = parent[size_t(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

void check_vertex(const TransitionGraph& g, int v, const char* what) {
  if (v < 0 || v >= g.n_vertices)
    throw std::invalid_argument(std::string(what) + " vertex " + std::to_string(v) +
                                " outside graph of size " + std::to_string(g.n_vertices));
}

}  // namespace

SearchResult dijkstra(const TransitionGraph& g, int source, int target) {
  check_vertex(g, source, "source");
  if (target != kAllVertices) check_vertex(g, target, "target");

  SearchResult res;
  SearchStats& st = res.stats;
  st.settled_distance.assign(size_t(g.n_vertices), kInfCost);
  std::vector<double> best(size_t(g.n_vertices), kInfCost);
  std::vector<int> parent(size_t(g.n_vertices), -1);
  std::vector<uint8_t> settled(size_t(g.n_vertices), 0);

  MinQueue queue;
  best[size_t(source)] = 0;
  queue.emplace(0.0, source);
  st.peak_frontier = 1;

  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (settled[size_t(v)]) continue;
    settled[size_t(v)] = 1;
    st.settled_distance[size_t(v)] = d;
    st.settled_order.push_back(v);
    ++st.expansions;
    if (v == target) break;
    for (const Edge& e : g.out(v)) {
      double nd = d + double(e.weight);
      if (nd < best[e.to]) {
        best[e.to] = nd;
        parent[e.to] = v;
        queue.emplace(nd, int(e.to));
        st.peak_frontier = std::max<int64_t>(st.peak_frontier, int64_t(queue.size()));
      }
    }
  }

  if (target != kAllVertices && settled[size_t(target)]) {
    Plan plan;
    plan.vertices = trace_parents(parent, target);
    plan.cost = st.settled_distance[size_t(target)];
    res.plan = std::move(plan);
  }
  return res;
}

Heuristic Heuristic::zero(int goal) {
  Heuristic h;
  h.kind = Kind::Zero;
  h.goal = goal;
  h.estimate = [](int) { return 0.0; };
  return h;
}

Heuristic Heuristic::euclidean_ground_truth(const RowMatf& positions, int goal, double scale) {
  Heuristic h;
  h.kind = Kind::EuclideanGroundTruth;
  h.goal = goal;
  double gx = positions(goal, 0), gy = positions(goal, 1);
  h.estimate = [&positions, gx, gy, scale](int v) {
    double dx = double(positions(v, 0)) - gx;
    double dy = double(positions(v, 1)) - gy;
    return std::sqrt(dx * dx + dy * dy) * scale;
  };
  return h;
}

Heuristic Heuristic::learned_global(const Eigen::MatrixXf& latents, double p, double scale,
                                    int goal) {
  Heuristic h;
  h.kind = Kind::LearnedGlobal;
  h.goal = goal;
  Eigen::RowVectorXf zg = latents.row(goal);
  h.estimate = [&latents, zg, p, scale](int v) {
    Eigen::RowVectorXf diff = latents.row(v) - zg;
    double d;
    if (p == 2.0) {
      d = double(diff.norm());
    } else if (p == 1.0) {
      d = double(diff.array().abs().sum());
    } else {
      double acc = 0;
      for (Eigen::Index i = 0; i < diff.size(); ++i) {
        double ax = std::max(std::abs(double(diff(i))), 1e-12);
        acc += std::exp(p * std::log(ax));
      }
      d = std::exp(std::log(acc) / p);
    }
    return d * scale;
  };
  return h;
}

SearchResult astar(const TransitionGraph& g, int source, int target, const Heuristic& h) {
  check_vertex(g, source, "source");
  check_vertex(g, target, "target");

  SearchResult res;
  SearchStats& st = res.stats;
  st.settled_distance.assign(size_t(g.n_vertices), kInfCost);
  std::vector<double> best(size_t(g.n_vertices), kInfCost);
  std::vector<int> parent(size_t(g.n_vertices), -1);
  std::vector<uint8_t> settled(size_t(g.n_vertices), 0);

  MinQueue queue;
  best[size_t(source)] = 0;
  queue.emplace(h.estimate(source), source);
  st.peak_frontier = 1;

  while (!queue.empty()) {
    auto [f, v] = queue.top();
    queue.pop();
    if (settled[size_t(v)]) continue;
    settled[size_t(v)] = 1;
    st.settled_distance[size_t(v)] = best[size_t(v)];
    st.settled_order.push_back(v);
    ++st.expansions;
    if (v == target) break;
    double d = best[size_t(v)];
    for (const Edge& e : g.out(v)) {
      if (settled[e.to]) continue;  // no re-opening
      double nd = d + double(e.weight);
      if (nd < best[e.to]) {
        best[e.to] = nd;
        parent[e.to] = v;
        queue.emplace(nd + h.estimate(int(e.to)), int(e.to));
        st.peak_frontier = std::max<int64_t>(st.peak_frontier, int64_t(queue.size()));
      }
    }
  }

  if (settled[size_t(target)]) {
    Plan plan;
    plan.vertices = trace_parents(parent, target);
    plan.cost = st.settled_distance[size_t(target)];
    res.plan = std::move(plan);
  }
  return res;
}

BfsTree bfs_neighborhood_tree(const TransitionGraph& g, int v, int k) {
  check_vertex(g, v, "bfs");
  if (k < 1) throw std::invalid_argument("bfs_neighborhood: k must be >= 1");
  BfsTree tree;
  tree.parent.assign(size_t(g.n_vertices), -1);
  std::vector<int> depth(size_t(g.n_vertices), -1);
  std::deque<int> queue;
  depth[size_t(v)] = 0;
  queue.push_back(v);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (depth[size_t(u)] >= k) break;  // deeper vertices are discovered, not expanded
    ++tree.expansions;
    for (const Edge& e : g.out(u)) {
      if (depth[e.to] != -1 || int(e.to) == v) continue;
      depth[e.to] = depth[size_t(u)] + 1;
      tree.parent[e.to] = u;
      tree.vertices.push_back(int(e.to));
      queue.push_back(int(e.to));
    }
  }
  std::sort(tree.vertices.begin(), tree.vertices.end());
  return tree;
}

std::vector<int> bfs_neighborhood(const TransitionGraph& g, int v, int k) {
  return bfs_neighborhood_tree(g, v, k).vertices;
}

std::optional<std::vector<int>> bfs_path(const TransitionGraph& g, int from, int to,
                                         int64_t* expansions) {
  check_vertex(g, from, "bfs from");
  check_vertex(g, to, "bfs to");
  if (from == to) return std::vector<int>{from};
  std::vector<int> parent(size_t(g.n_vertices), -1);
  std::vector<uint8_t> seen(size_t(g.n_vertices), 0);
  std::deque<int> queue;
  seen[size_t(from)] = 1;
  queue.push_back(from);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (expansions) ++*expansions;
    for (const Edge& e : g.out(u)) {
      if (seen[e.to]) continue;
      seen[e.to] = 1;
      parent[e.to] = u;
      if (int(e.to) == to) return trace_parents(parent, to);
      queue.push_back(int(e.to));
    }
  }
  return std::nullopt;
}

double plan_cost(const TransitionGraph& g, const std::vector<int>& vertices) {
  double cost = 0;
  for (size_t i = 0; i + 1 < vertices.size(); ++i) {
    auto w = g.edge_weight(vertices[i], vertices[i + 1]);
    if (!w)
      throw std::invalid_argument("plan traverses a missing edge " +
                                  std::to_string(vertices[i]) + " -> " +
                                  std::to_string(vertices[i + 1]));
    cost += double(*w);
  }
  return cost;
}

BudgetSearchResult budget_limited_search(const TransitionGraph& g, int source, int target,
                                         const CostToGoal& cost, int lookahead_k,
                                         int frontier_cap, int step_limit) {
  check_vertex(g, source, "source");
  check_vertex(g, target, "target");
  if (lookahead_k < 1) throw std::invalid_argument("budget search: lookahead_k >= 1");
  if (frontier_cap < 1) throw std::invalid_argument("budget search: frontier_cap >= 1");

  BudgetSearchResult res;
  res.walk.vertices.push_back(source);
  if (source == target) {
    res.reached_goal = true;
    return res;
  }

  std::vector<uint8_t> visited(size_t(g.n_vertices), 0);
  visited[size_t(source)] = 1;
  std::vector<std::pair<double, int>> frontier;  // (cost, vertex), kept sorted

  int current = source;
  for (int move = 0; move < step_limit; ++move) {
    BfsTree nb = bfs_neighborhood_tree(g, current, lookahead_k);
    res.stats.expansions += nb.expansions;
    for (int u : nb.vertices)
      if (!visited[size_t(u)]) frontier.emplace_back(cost(u), u);
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end(),
                               [](const auto& a, const auto& b) { return a.second == b.second; }),
                   frontier.end());
    if (int(frontier.size()) > frontier_cap) frontier.resize(size_t(frontier_cap));
    res.stats.peak_frontier =
        std::max<int64_t>(res.stats.peak_frontier, int64_t(frontier.size()));

    int next = -1;
    while (!frontier.empty()) {
      int candidate = frontier.front().second;
      frontier.erase(frontier.begin());
      if (!visited[size_t(candidate)]) {
        next = candidate;
        break;
      }
    }
    if (next == -1) break;  // all candidates visited or none exist

    // path from the current vertex; stale frontier entries need a reconnect
    std::vector<int> hop_path;
    if (nb.parent[size_t(next)] != -1) {
      hop_path = trace_parents(nb.parent, next);
    } else {
      auto p = bfs_path(g, current, next, &res.stats.expansions);
      if (!p) break;
      hop_path = std::move(*p);
    }
    for (size_t i = 1; i < hop_path.size(); ++i) res.walk.vertices.push_back(hop_path[i]);
    visited[size_t(next)] = 1;
    current = next;
    if (current == target) {
      res.reached_goal = true;
      break;
    }
  }
  res.walk.cost = plan_cost(g, res.walk.vertices);
  return res;
}

}  // namespace plan2vec
