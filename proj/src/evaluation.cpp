#include "plan2vec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "plan2vec/binio.hpp"
#include "plan2vec/concurrency.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;

EvalMethod eval_method_from_name(const std::string& name) {
  if (name == "Plan2vecValue") return EvalMethod::Plan2vecValue;
  if (name == "LocalMetricGreedy") return EvalMethod::LocalMetricGreedy;
  if (name == "GraphTruthOracle") return EvalMethod::GraphTruthOracle;
  if (name == "Random") return EvalMethod::Random;
  throw std::invalid_argument(
      "unknown method name: " + name +
      " (expected Plan2vecValue, LocalMetricGreedy, GraphTruthOracle, or Random)");
}

std::string eval_method_name(EvalMethod m) {
  switch (m) {
    case EvalMethod::Plan2vecValue: return "Plan2vecValue";
    case EvalMethod::LocalMetricGreedy: return "LocalMetricGreedy";
    case EvalMethod::GraphTruthOracle: return "GraphTruthOracle";
    case EvalMethod::Random: return "Random";
  }
  throw std::logic_error("unreachable");
}

std::vector<EvalTask> sample_eval_tasks(const TransitionGraph& g, int n_tasks, uint64_t seed,
                                        int max_hops, float success_radius, int step_budget) {
  Rng rng(hash_combine(seed, 0x7a53));
  std::vector<EvalTask> tasks;
  tasks.reserve(size_t(n_tasks));
  int guard = 0;
  while (int(tasks.size()) < n_tasks) {
    if (++guard > n_tasks * 100)
      throw std::runtime_error("task sampling stalled: graph may be too disconnected");
    int start = rng.index(g.n_vertices);
    std::vector<int> ball = bfs_neighborhood(g, start, max_hops);
    if (ball.empty()) continue;
    int goal = ball[size_t(rng.index(int(ball.size())))];
    EvalTask t;
    t.start = start;
    t.goal = goal;
    t.success_radius = success_radius;
    t.step_budget = step_budget;
    t.connected = true;
    tasks.push_back(t);
  }
  return tasks;
}

namespace {

double latent_row_distance(const Eigen::MatrixXf& latents, int a, int b, double p) {
  Eigen::RowVectorXf diff = latents.row(a) - latents.row(b);
  if (p == 2.0) return double(diff.norm());
  if (p == 1.0) return double(diff.array().abs().sum());
  double acc = 0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    double ax = std::max(std::abs(double(diff(i))), 1e-12);
    acc += std::exp(p * std::log(ax));
  }
  return std::exp(std::log(acc) / p);
}

struct MethodContext {
  EvalMethod method;
  const TransitionGraph* g = nullptr;
  const TransitionGraph* reversed = nullptr;
  const Eigen::MatrixXf* global_latents = nullptr;
  double global_p = 2.0;
  const Eigen::MatrixXf* local_latents = nullptr;
  uint64_t seed = 0;

  CostToGoal cost_for(const EvalTask& task, int task_index,
                      std::vector<double>* oracle_dist_storage) const {
    switch (method) {
      case EvalMethod::Plan2vecValue: {
        const Eigen::MatrixXf* z = global_latents;
        double p = global_p;
        int goal = task.goal;
        return [z, p, goal](int v) { return latent_row_distance(*z, v, goal, p); };
      }
      case EvalMethod::LocalMetricGreedy: {
        const Eigen::MatrixXf* z = local_latents;
        int goal = task.goal;
        return [z, goal](int v) { return latent_row_distance(*z, v, goal, 2.0); };
      }
      case EvalMethod::GraphTruthOracle: {
        auto res = dijkstra(*reversed, task.goal, kAllVertices);
        *oracle_dist_storage = std::move(res.stats.settled_distance);
        const std::vector<double>* d = oracle_dist_storage;
        return [d](int v) { return (*d)[size_t(v)]; };
      }
      case EvalMethod::Random: {
        uint64_t s = hash_combine(hash_combine(seed, 0x4a9d), uint64_t(task_index));
        return [s](int v) {
          return double(mix64(hash_combine(s, uint64_t(v))) >> 11) * 0x1.0p-53;
        };
      }
    }
    throw std::logic_error("unreachable");
  }
};

struct TaskOutcome {
  bool success = false;
  int64_t expansions = 0;
  int plan_hops = 0;
};

TaskOutcome evaluate_task(const MethodContext& ctx, const TrajectoryDataset& ds,
                          const EvalTask& task, int task_index, int lookahead_k,
                          int frontier_cap) {
  std::vector<double> oracle_dist;
  CostToGoal cost = ctx.cost_for(task, task_index, &oracle_dist);
  auto res = budget_limited_search(*ctx.g, task.start, task.goal, cost, lookahead_k,
                                   frontier_cap, task.step_budget);
  TaskOutcome out;
  out.expansions = res.stats.expansions;
  out.plan_hops = int(res.walk.vertices.size()) - 1;
  int reached = res.walk.vertices.back();
  double dx = double(ds.positions(reached, 0)) - double(ds.positions(task.goal, 0));
  double dy = double(ds.positions(reached, 1)) - double(ds.positions(task.goal, 1));
  out.success = res.reached_goal ||
                std::sqrt(dx * dx + dy * dy) <= double(task.success_radius);
  if (!task.connected) out.success = false;
  return out;
}

MethodContext make_context(EvalMethod method, const TransitionGraph& g,
                           const TransitionGraph& reversed,
                           const Eigen::MatrixXf* global_latents, double global_p,
                           const Eigen::MatrixXf* local_latents, uint64_t seed) {
  MethodContext ctx;
  ctx.method = method;
  ctx.g = &g;
  ctx.reversed = &reversed;
  ctx.global_latents = global_latents;
  ctx.global_p = global_p;
  ctx.local_latents = local_latents;
  ctx.seed = seed;
  if (method == EvalMethod::Plan2vecValue && !global_latents)
    throw std::invalid_argument("Plan2vecValue requires a trained global metric");
  if (method == EvalMethod::LocalMetricGreedy && !local_latents)
    throw std::invalid_argument("LocalMetricGreedy requires a trained local metric");
  return ctx;
}

MethodReport summarize(const std::string& name, const std::vector<TaskOutcome>& outcomes) {
  MethodReport rep;
  rep.method = name;
  rep.n = int(outcomes.size());
  double exp_sum = 0, per_step_sum = 0;
  int per_step_n = 0;
  for (const auto& o : outcomes) {
    rep.successes += o.success ? 1 : 0;
    exp_sum += double(o.expansions);
    if (o.success && o.plan_hops > 0) {
      per_step_sum += double(o.expansions) / double(o.plan_hops);
      ++per_step_n;
    }
  }
  rep.rate = rep.n ? double(rep.successes) / rep.n : 0;
  auto ci = wilson_interval(rep.successes, rep.n);
  rep.wilson_lo = ci.lo;
  rep.wilson_hi = ci.hi;
  rep.mean_expansions = rep.n ? exp_sum / rep.n : 0;
  rep.mean_expansions_per_step = per_step_n ? per_step_sum / per_step_n : 0;
  return rep;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

EvalReport run_success_eval(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const GlobalMetric* global, const LocalMetric* local,
                            const std::vector<EvalMethod>& methods,
                            const std::vector<EvalTask>& tasks, int lookahead_k,
                            uint64_t seed, int frontier_cap, int workers) {
  EvalReport report;
  report.layout = ds.layout_name;
  report.n_tasks = int(tasks.size());
  report.lookahead_k = lookahead_k;
  report.frontier_cap = frontier_cap;
  report.seed = seed;
  if (!tasks.empty()) {
    report.success_radius = tasks.front().success_radius;
    report.step_budget = tasks.front().step_budget;
  }

  TransitionGraph reversed = g.reversed();
  Eigen::MatrixXf global_latents, local_latents;
  if (global) global_latents = global->embed_all(ds.observations);
  if (local) local_latents = local->embed_all(ds.observations);

  for (EvalMethod method : methods) {
    MethodContext ctx = make_context(method, g, reversed,
                                     global ? &global_latents : nullptr,
                                     global ? global->p() : 2.0,
                                     local ? &local_latents : nullptr, seed);
    std::vector<TaskOutcome> outcomes(tasks.size());
    parallel_for(int(tasks.size()), workers, [&](int i) {
      outcomes[size_t(i)] = evaluate_task(ctx, ds, tasks[size_t(i)], i, lookahead_k,
                                          frontier_cap);
    });
    report.methods.push_back(summarize(eval_method_name(method), outcomes));
  }
  return report;
}

void EvalReport::save(const std::filesystem::path& path) const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "eval_report";
  j["layout"] = layout;
  j["n_tasks"] = n_tasks;
  j["lookahead_k"] = lookahead_k;
  j["frontier_cap"] = frontier_cap;
  j["seed"] = seed;
  j["success_radius"] = success_radius;
  j["step_budget"] = step_budget;
  json ms = json::array();
  for (const auto& m : methods) {
    json row;
    row["method"] = m.method;
    row["n"] = m.n;
    row["successes"] = m.successes;
    row["rate"] = m.rate;
    row["wilson_lo"] = m.wilson_lo;
    row["wilson_hi"] = m.wilson_hi;
    row["mean_expansions"] = m.mean_expansions;
    row["mean_expansions_per_step"] = m.mean_expansions_per_step;
    ms.push_back(row);
  }
  j["methods"] = ms;
  write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<LookaheadPoint> run_lookahead_sweep(const TransitionGraph& g,
                                                const TrajectoryDataset& ds,
                                                const GlobalMetric* global,
                                                const LocalMetric* local, EvalMethod method,
                                                const std::vector<int>& k_values,
                                                const std::vector<EvalTask>& tasks,
                                                uint64_t seed, int workers) {
  std::vector<LookaheadPoint> curve;
  for (int k : k_values) {
    EvalReport rep = run_success_eval(g, ds, global, local, {method}, tasks, k, seed, 1,
                                      workers);
    const MethodReport& m = rep.methods.front();
    LookaheadPoint pt;
    pt.k = k;
    pt.method = m.method;
    pt.successes = m.successes;
    pt.n = m.n;
    pt.rate = m.rate;
    pt.wilson_lo = m.wilson_lo;
    pt.wilson_hi = m.wilson_hi;
    curve.push_back(pt);
  }
  return curve;
}

void save_lookahead_csv(const std::vector<LookaheadPoint>& curve,
                        const std::filesystem::path& path) {
  std::string out = "k,method,successes,n,rate,wilson_lo,wilson_hi\n";
  for (const auto& p : curve) {
    out += std::to_string(p.k) + "," + p.method + "," + std::to_string(p.successes) + "," +
           std::to_string(p.n) + "," + fmt(p.rate) + "," + fmt(p.wilson_lo) + "," +
           fmt(p.wilson_hi) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<PlanningCostRow> run_planning_cost(const TransitionGraph& g,
                                               const TrajectoryDataset& ds,
                                               const GlobalMetric& global,
                                               const std::vector<int>& plan_lengths,
                                               int queries_per_length, uint64_t seed,
                                               int workers) {
  Rng rng(hash_combine(seed, 0xc057));
  Eigen::MatrixXf latents = global.embed_all(ds.observations);
  const double heuristic_scale = 1.0 / ds.step_size;  // arena units -> step estimate

  // Queries bucketed by the hop length of the optimal (min-cost) plan.
  struct Query {
    int s, t, optimal_hops;
    double optimal_cost;
  };
  std::vector<Query> queries;
  for (int length : plan_lengths) {
    int found = 0;
    for (int attempt = 0; attempt < 400 && found < queries_per_length; ++attempt) {
      int s = rng.index(g.n_vertices);
      std::vector<int> ball = bfs_neighborhood(g, s, length + 2);
      if (ball.empty()) continue;
      for (int probe = 0; probe < 60; ++probe) {
        int t = ball[size_t(rng.index(int(ball.size())))];
        auto r = dijkstra(g, s, t);
        if (!r.plan) continue;
        int h = int(r.plan->vertices.size()) - 1;
        if (h == length) {
          queries.push_back(Query{s, t, h, r.plan->cost});
          ++found;
          break;
        }
      }
    }
  }

  std::vector<std::vector<PlanningCostRow>> per_query(queries.size());
  parallel_for(int(queries.size()), workers, [&](int qi) {
    const Query& q = queries[size_t(qi)];
    auto& rows = per_query[size_t(qi)];
    auto push = [&](const std::string& planner, const std::optional<Plan>& plan,
                    const SearchStats& st, bool success) {
      PlanningCostRow row;
      row.query_id = qi;
      row.planner = planner;
      row.optimal_hops = q.optimal_hops;
      row.optimal_cost = q.optimal_cost;
      row.plan_hops = plan ? int(plan->vertices.size()) - 1 : 0;
      row.cost = plan ? plan->cost : 0;
      row.expansions = st.expansions;
      row.peak_frontier = st.peak_frontier;
      row.suboptimality_ratio = plan && q.optimal_cost > 0 ? plan->cost / q.optimal_cost : 1.0;
      row.success = success;
      rows.push_back(row);
    };

    auto dj = dijkstra(g, q.s, q.t);
    push("Dijkstra", dj.plan, dj.stats, dj.plan.has_value());

    auto he = Heuristic::euclidean_ground_truth(ds.positions, q.t, heuristic_scale);
    auto ae = astar(g, q.s, q.t, he);
    push("AstarEuclidean", ae.plan, ae.stats, ae.plan.has_value());

    auto hl = Heuristic::learned_global(latents, global.p(),
                                        double(global.distance_scale), q.t);
    auto al = astar(g, q.s, q.t, hl);
    push("AstarLearned", al.plan, al.stats, al.plan.has_value());

    int goal = q.t;
    CostToGoal cost = [&latents, goal, &global](int v) {
      return latent_row_distance(latents, v, goal, global.p());
    };
    auto re = budget_limited_search(g, q.s, q.t, cost, 1, 1,
                                    std::max(200, 6 * q.optimal_hops));
    push("Reactive", re.reached_goal ? std::optional<Plan>(re.walk) : std::nullopt, re.stats,
         re.reached_goal);
  });

  std::vector<PlanningCostRow> rows;
  for (const auto& part : per_query) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

void save_planning_cost_csv(const std::vector<PlanningCostRow>& rows,
                            const std::filesystem::path& path) {
  std::string out =
      "query_id,planner,optimal_hops,optimal_cost,plan_hops,cost,expansions,peak_frontier,"
      "suboptimality_ratio,success\n";
  for (const auto& r : rows) {
    out += std::to_string(r.query_id) + "," + r.planner + "," +
           std::to_string(r.optimal_hops) + "," + fmt(r.optimal_cost) + "," +
           std::to_string(r.plan_hops) + "," + fmt(r.cost) + "," +
           std::to_string(r.expansions) + "," + std::to_string(r.peak_frontier) + "," +
           fmt(r.suboptimality_ratio) + "," + (r.success ? "1" : "0") + "\n";
  }
  write_file_atomic(path, out);
}

DiagnosticsBundle run_embedding_diagnostics(const GlobalMetric& global,
                                            const LocalMetric& local,
                                            const TrajectoryDataset& ds,
                                            const TransitionGraph& g,
                                            const std::filesystem::path& out_dir,
                                            uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  DiagnosticsBundle bundle;

  // (i) local score vs ground-truth distance scatter
  Rng rng(hash_combine(seed, 0xd1a6));
  const int n_scatter = std::min(2000, ds.count() * 4);
  Eigen::MatrixXf local_latents = local.embed_all(ds.observations);
  std::string scatter = "gt_distance,local_score\n";
  for (int i = 0; i < n_scatter; ++i) {
    int a = rng.index(ds.count());
    int b = rng.index(ds.count());
    double dx = double(ds.positions(a, 0)) - double(ds.positions(b, 0));
    double dy = double(ds.positions(a, 1)) - double(ds.positions(b, 1));
    double gt = std::sqrt(dx * dx + dy * dy);
    double score = latent_row_distance(local_latents, a, b, 2.0);
    scatter += fmt(gt) + "," + fmt(score) + "\n";
  }
  write_file_atomic(out_dir / "local_score_vs_distance.csv", scatter);
  bundle.scatter_rows = n_scatter;

  // (ii) embedding scatter colored by ground truth (same schema as the export)
  export_embedding(global, ds, out_dir / "embedding_scatter.csv");

  // (iii) global-metric fidelity, (iv) local accuracy at threshold 1.5
  ReachablePairs pairs = sample_reachable_pairs(g, 1000, 16, hash_combine(seed, 0x5bea));
  bundle.spearman_global = spearman_probe(global, ds, pairs);
  bundle.local_holdout_accuracy = pair_classification_accuracy(
      local, ds, holdout_rollouts(ds, 0), 2048, hash_combine(seed, 0xacc), 1.5);

  json summary;
  summary["spearman_global_vs_graph_truth"] = bundle.spearman_global;
  summary["local_holdout_accuracy_at_1p5"] = bundle.local_holdout_accuracy;
  summary["scatter_rows"] = bundle.scatter_rows;
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  return bundle;
}

}  // namespace plan2vec
