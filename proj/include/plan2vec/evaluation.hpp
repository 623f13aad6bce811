#ifndef PLAN2VEC_EVALUATION_HPP
#define PLAN2VEC_EVALUATION_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "plan2vec/local_metric.hpp"
#include "plan2vec/planner.hpp"
#include "plan2vec/stats.hpp"
#include "plan2vec/trainer.hpp"
#include "plan2vec/transition_graph.hpp"

namespace plan2vec {

enum class EvalMethod { Plan2vecValue, LocalMetricGreedy, GraphTruthOracle, Random };

EvalMethod eval_method_from_name(const std::string& name);
std::string eval_method_name(EvalMethod m);

struct EvalTask {
  int start = -1;
  int goal = -1;
  float success_radius = 0.15f;  // arena units, on ground-truth positions
  int step_budget = 50;
  bool connected = true;  // disconnected tasks count as failures for every method
};

// Start uniform over vertices, goal uniform over the <= max_hops BFS ball
// around it (connected by construction).
std::vector<EvalTask> sample_eval_tasks(const TransitionGraph& g, int n_tasks, uint64_t seed,
                                        int max_hops = 50, float success_radius = 0.15f,
                                        int step_budget = 50);

struct MethodReport {
  std::string method;
  int n = 0;
  int successes = 0;
  double rate = 0;
  double wilson_lo = 0, wilson_hi = 0;
  double mean_expansions = 0;
  double mean_expansions_per_step = 0;  // successful tasks only
};

struct EvalReport {
  std::string layout;
  int n_tasks = 0;
  int lookahead_k = 1;
  int frontier_cap = 1;
  uint64_t seed = 0;
  float success_radius = 0.15f;
  int step_budget = 50;
  std::vector<MethodReport> methods;

  void save(const std::filesystem::path& path) const;
};

// Greedy budgeted planning per task and method; success when the reached
// vertex's ground-truth position lies within success_radius of the goal's.
EvalReport run_success_eval(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const GlobalMetric* global, const LocalMetric* local,
                            const std::vector<EvalMethod>& methods,
                            const std::vector<EvalTask>& tasks, int lookahead_k,
                            uint64_t seed, int frontier_cap = 1, int workers = 1);

struct LookaheadPoint {
  int k = 1;
  std::string method;
  int successes = 0;
  int n = 0;
  double rate = 0;
  double wilson_lo = 0, wilson_hi = 0;
};

std::vector<LookaheadPoint> run_lookahead_sweep(const TransitionGraph& g,
                                                const TrajectoryDataset& ds,
                                                const GlobalMetric* global,
                                                const LocalMetric* local, EvalMethod method,
                                                const std::vector<int>& k_values,
                                                const std::vector<EvalTask>& tasks,
                                                uint64_t seed, int workers = 1);

void save_lookahead_csv(const std::vector<LookaheadPoint>& curve,
                        const std::filesystem::path& path);

struct PlanningCostRow {
  int query_id = 0;
  std::string planner;
  int optimal_hops = 0;      // ground-truth plan length (steps of the optimal plan)
  double optimal_cost = 0;
  int plan_hops = 0;
  double cost = 0;
  int64_t expansions = 0;
  int64_t peak_frontier = 0;
  double suboptimality_ratio = 1.0;
  bool success = true;
};

// Expansion accounting across planners for queries bucketed by optimal plan
// length: Dijkstra, A*(Euclidean), A*(Learned), and the k=1 reactive planner.
std::vector<PlanningCostRow> run_planning_cost(const TransitionGraph& g,
                                               const TrajectoryDataset& ds,
                                               const GlobalMetric& global,
                                               const std::vector<int>& plan_lengths,
                                               int queries_per_length, uint64_t seed,
                                               int workers = 1);

void save_planning_cost_csv(const std::vector<PlanningCostRow>& rows,
                            const std::filesystem::path& path);

struct DiagnosticsBundle {
  double spearman_global = 0;          // D vs exact graph distance
  double local_holdout_accuracy = 0;   // threshold 1.5
  int scatter_rows = 0;
};

// Emits diagnostics CSVs (local score vs ground-truth distance scatter,
// embedding scatter) and the summary numbers.
DiagnosticsBundle run_embedding_diagnostics(const GlobalMetric& global,
                                            const LocalMetric& local,
                                            const TrajectoryDataset& ds,
                                            const TransitionGraph& g,
                                            const std::filesystem::path& out_dir,
                                            uint64_t seed);

}  // namespace plan2vec

#endif
