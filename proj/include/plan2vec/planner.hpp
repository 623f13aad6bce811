#ifndef PLAN2VEC_PLANNER_HPP
#define PLAN2VEC_PLANNER_HPP

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "plan2vec/transition_graph.hpp"

namespace plan2vec {

constexpr double kInfCost = std::numeric_limits<double>::infinity();
constexpr int kAllVertices = -1;

struct Plan {
  std::vector<int> vertices;  // start .. goal, consecutive pairs are edges
  double cost = 0;
};

struct SearchStats {
  int64_t expansions = 0;     // vertices settled / popped
  int64_t peak_frontier = 0;  // max priority-queue (or candidate-frontier) size
  std::vector<double> settled_distance;  // finalized cost per vertex, +inf if unsettled
  std::vector<int> settled_order;        // the retained search tree
  double suboptimality_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct SearchResult {
  std::optional<Plan> plan;  // nullopt: target unreachable
  SearchStats stats;
};

// Exact shortest paths; ties broken toward the smaller vertex id. With
// target == kAllVertices the whole reachable component is settled and
// returned through stats.settled_*.
SearchResult dijkstra(const TransitionGraph& g, int source, int target);

struct Heuristic {
  enum class Kind { Zero, EuclideanGroundTruth, LearnedGlobal };
  Kind kind = Kind::Zero;
  int goal = -1;
  std::function<double(int)> estimate;  // estimated cost-to-goal

  static Heuristic zero(int goal);
  // Ground-truth positions; evaluation only. scale converts arena units to
  // edge-cost units (1 / step_size estimates the step count).
  static Heuristic euclidean_ground_truth(const RowMatf& positions, int goal, double scale);
  // Latent-cache heuristic: |z_v - z_goal|_p * scale; the goal latent row is
  // fixed once per query.
  static Heuristic learned_global(const Eigen::MatrixXf& latents, double p, double scale,
                                  int goal);
};

// A* without re-opening settled vertices. With an admissible heuristic the
// returned cost equals dijkstra's; with a learned (possibly inadmissible)
// heuristic the plan stays valid and suboptimality is measured by the caller.
SearchResult astar(const TransitionGraph& g, int source, int target, const Heuristic& h);

// All vertices reachable within <= k unweighted hops, excluding v itself.
std::vector<int> bfs_neighborhood(const TransitionGraph& g, int v, int k);

struct BfsTree {
  std::vector<int> vertices;  // sorted, v excluded
  std::vector<int> parent;    // BFS tree parent per vertex, -1 outside
  int64_t expansions = 0;     // dequeued-and-expanded vertices
};
BfsTree bfs_neighborhood_tree(const TransitionGraph& g, int v, int k);

// Fewest-hop path between two vertices (unweighted BFS).
std::optional<std::vector<int>> bfs_path(const TransitionGraph& g, int from, int to,
                                         int64_t* expansions = nullptr);

// Cost-to-goal scorer: lower is better (a value function V corresponds to
// cost = -V).
using CostToGoal = std::function<double(int)>;

struct BudgetSearchResult {
  bool reached_goal = false;
  Plan walk;  // trajectory actually traversed, including BFS subplans
  SearchStats stats;
};

// Greedy budgeted search: enumerate the k-hop neighborhood of the current
// vertex, keep the frontier_cap best candidates by cost-to-goal, and move to
// the best one; visited vertices are never re-selected. With k = 1 and
// frontier_cap = 1 this is the reactive planner.
BudgetSearchResult budget_limited_search(const TransitionGraph& g, int source, int target,
                                         const CostToGoal& cost, int lookahead_k,
                                         int frontier_cap, int step_limit);

// Re-sum a plan's cost from graph weights; throws if an edge is missing.
double plan_cost(const TransitionGraph& g, const std::vector<int>& vertices);

}  // namespace plan2vec

#endif
