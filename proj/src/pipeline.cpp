#include "plan2vec/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "plan2vec/binio.hpp"
#include "plan2vec/evaluation.hpp"
#include "plan2vec/local_metric.hpp"
#include "plan2vec/maze_env.hpp"
#include "plan2vec/planner.hpp"
#include "plan2vec/svg_plot.hpp"
#include "plan2vec/trainer.hpp"
#include "plan2vec/transition_graph.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;

namespace {

RunPaths paths_of(const RunConfig& cfg) {
  if (cfg.out_dir.empty())
    throw StageError("no output directory configured (set out_dir or --out)");
  return RunPaths{cfg.out_dir};
}

void require_artifact(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path))
    throw StageError("missing artifact: " + path.string() + " (produced by `" + producer +
                     "`; run it first)");
}

// Stage bookkeeping: writes the config snapshot up front and appends one
// run.jsonl record per stage.
class StageScope {
 public:
  StageScope(const RunConfig& cfg, const RunPaths& paths, std::string name)
      : cfg_(cfg), paths_(paths), name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(paths.root);
    cfg.save(paths.config());
  }

  void input(const std::filesystem::path& p) { inputs_[p.string()] = hash_file_hex(p); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }

  void done() {
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    json rec;
    rec["stage"] = name_;
    rec["status"] = "ok";
    rec["duration_s"] = elapsed.count();
    rec["config_hash"] = cfg_.hash();
    rec["inputs"] = inputs_;
    rec["outputs"] = outputs_;
    std::ofstream log(paths_.run_log(), std::ios::app);
    log << rec.dump() << "\n";
  }

 private:
  const RunConfig& cfg_;
  const RunPaths& paths_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

LocalMetricConfig local_config(const RunConfig& cfg, const RunPaths& paths) {
  LocalMetricConfig lc;
  lc.epochs = cfg.local_epochs;
  lc.lr = cfg.local_lr;
  lc.ratio = cfg.local_ratio;
  lc.batch = cfg.local_batch;
  lc.variant = cfg.local_variant == "trunk" ? LocalMetricVariant::Trunk
                                            : LocalMetricVariant::Siamese;
  lc.hidden = cfg.local_hidden;
  lc.embed_dim = cfg.local_embed_dim;
  lc.hinge_far = cfg.local_hinge_far;
  lc.k_negatives = cfg.local_k_negatives;
  lc.holdout_fold = cfg.holdout_fold;
  lc.seed = cfg.seed;
  lc.metrics_path = paths.local_metrics();
  return lc;
}

TrainConfig trainer_config(const RunConfig& cfg, const RunPaths& paths) {
  TrainConfig tc;
  tc.mode = cfg.trainer_mode == "fvi" ? TrainConfig::Mode::FittedVI
                                      : TrainConfig::Mode::Amortized;
  tc.rounds = cfg.trainer_rounds;
  tc.batch_rollouts = cfg.batch_rollouts;
  tc.steps_per_rollout = cfg.steps_per_rollout;
  tc.opt_epochs = cfg.opt_epochs;
  tc.minibatch = cfg.minibatch;
  tc.lr = cfg.trainer_lr;
  tc.target_scale = cfg.target_scale;
  tc.lookahead_k = cfg.lookahead_k;
  tc.step_limit = cfg.step_limit;
  tc.target_sync_interval = cfg.target_sync_interval;
  tc.latent_dim = cfg.latent_dim;
  tc.p = cfg.metric_p;
  tc.hidden = cfg.global_hidden;
  tc.seed = cfg.seed;
  tc.workers = cfg.workers;
  tc.metrics_path = paths.global_metrics();
  return tc;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string position_color(double x, double y) {
  auto channel = [](double v) {
    int c = int(std::lround((v + 1.0) / 2.0 * 255.0));
    return std::min(255, std::max(0, c));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x80", channel(x), channel(y));
  return buf;
}

}  // namespace

void run_gen_data(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "gen-data");
  MazeLayout layout = MazeLayout::from_name(cfg.layout);
  TrajectoryDataset ds =
      generate_rollouts(layout, cfg.n_rollouts, cfg.horizon, cfg.n_policies, cfg.seed,
                        cfg.resolution, cfg.step_size, cfg.workers);
  ds.save(paths.dataset_dir());
  scope.output(paths.dataset_manifest());
  scope.done();
}

void run_train_local(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "train-local");
  require_artifact(paths.dataset_manifest(), "gen-data");
  scope.input(paths.dataset_manifest());
  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  LocalMetricConfig lc = local_config(cfg, paths);
  LocalTrainResult result = cfg.local_objective == "nce" ? train_local_metric_nce(ds, lc)
                                                         : train_local_metric(ds, lc);
  result.metric.save(paths.local_dir());
  scope.output(paths.local_model());
  scope.done();
}

void run_build_graph(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "build-graph");
  require_artifact(paths.dataset_manifest(), "gen-data");
  require_artifact(paths.local_model(), "train-local");
  scope.input(paths.dataset_manifest());
  scope.input(paths.local_model());
  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  LocalMetric metric = LocalMetric::load(paths.local_dir());
  TransitionGraph g =
      build_graph(ds, metric, float(cfg.d0), cfg.workers, cfg.graph_block);
  g.save(paths.graph_dir());
  scope.output(paths.graph_meta());
  scope.done();
}

void run_train_plan2vec(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "train-plan2vec");
  require_artifact(paths.dataset_manifest(), "gen-data");
  require_artifact(paths.graph_meta(), "build-graph");
  scope.input(paths.dataset_manifest());
  scope.input(paths.graph_meta());
  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  TransitionGraph g = TransitionGraph::load(paths.graph_dir());
  TrainConfig tc = trainer_config(cfg, paths);
  TrainResult result = tc.mode == TrainConfig::Mode::FittedVI ? train_fitted_vi(g, ds, tc)
                                                              : train_amortized(g, ds, tc);
  result.metric.save(paths.global_dir());
  scope.output(paths.global_model());
  scope.done();
}

void run_evaluate(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "evaluate");
  require_artifact(paths.dataset_manifest(), "gen-data");
  require_artifact(paths.graph_meta(), "build-graph");
  require_artifact(paths.local_model(), "train-local");
  require_artifact(paths.global_model(), "train-plan2vec");
  scope.input(paths.dataset_manifest());
  scope.input(paths.graph_meta());
  scope.input(paths.local_model());
  scope.input(paths.global_model());

  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  TransitionGraph g = TransitionGraph::load(paths.graph_dir());
  LocalMetric local = LocalMetric::load(paths.local_dir());
  GlobalMetric global = GlobalMetric::load(paths.global_dir());

  std::vector<EvalMethod> methods;
  for (const auto& name : cfg.eval_methods) methods.push_back(eval_method_from_name(name));
  std::vector<EvalTask> tasks =
      sample_eval_tasks(g, cfg.eval_n_tasks, cfg.seed, cfg.eval_max_goal_hops,
                        float(cfg.eval_success_radius), cfg.eval_step_budget);
  EvalReport report = run_success_eval(g, ds, &global, &local, methods, tasks, cfg.eval_k,
                                       cfg.seed, 1, cfg.workers);
  report.save(paths.eval_report());
  scope.output(paths.eval_report());

  auto curve = run_lookahead_sweep(g, ds, &global, &local, EvalMethod::Plan2vecValue,
                                   cfg.eval_k_values, tasks, cfg.seed, cfg.workers);
  save_lookahead_csv(curve, paths.lookahead_curve());
  scope.output(paths.lookahead_curve());

  run_embedding_diagnostics(global, local, ds, g, paths.diagnostics_dir(), cfg.seed);
  scope.output(paths.diagnostics_dir() / "summary.json");
  scope.done();
}

void run_plan_cost(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "plan-cost");
  require_artifact(paths.dataset_manifest(), "gen-data");
  require_artifact(paths.graph_meta(), "build-graph");
  require_artifact(paths.global_model(), "train-plan2vec");
  scope.input(paths.graph_meta());
  scope.input(paths.global_model());
  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  TransitionGraph g = TransitionGraph::load(paths.graph_dir());
  GlobalMetric global = GlobalMetric::load(paths.global_dir());
  auto rows = run_planning_cost(g, ds, global, cfg.plancost_lengths,
                                cfg.plancost_queries_per_length, cfg.seed, cfg.workers);
  save_planning_cost_csv(rows, paths.planning_cost());
  scope.output(paths.planning_cost());
  scope.done();
}

void run_export_embedding(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "export-embedding");
  require_artifact(paths.dataset_manifest(), "gen-data");
  require_artifact(paths.global_model(), "train-plan2vec");
  scope.input(paths.global_model());
  TrajectoryDataset ds = TrajectoryDataset::load(paths.dataset_dir());
  GlobalMetric global = GlobalMetric::load(paths.global_dir());
  export_embedding(global, ds, paths.embedding_csv());
  scope.output(paths.embedding_csv());
  scope.done();
}

void run_plot(const RunConfig& cfg) {
  RunPaths paths = paths_of(cfg);
  StageScope scope(cfg, paths, "plot");
  require_artifact(paths.embedding_csv(), "export-embedding");
  scope.input(paths.embedding_csv());
  std::filesystem::create_directories(paths.plots_dir());

  {  // embedding map colored by ground-truth position
    auto rows = read_csv(paths.embedding_csv());
    std::vector<SvgPoint> pts;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 5) continue;
      SvgPoint p;
      p.x = std::stod(r[1]);
      p.y = std::stod(r[2]);
      p.color = position_color(std::stod(r[r.size() - 2]), std::stod(r[r.size() - 1]));
      pts.push_back(p);
    }
    write_scatter_svg(paths.plots_dir() / "embedding_map.svg", pts,
                      "latent embedding (colored by ground-truth position)");
    scope.output(paths.plots_dir() / "embedding_map.svg");
  }

  if (std::filesystem::exists(paths.lookahead_curve())) {
    auto rows = read_csv(paths.lookahead_curve());
    std::map<std::string, SvgSeries> series;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 5) continue;
      auto& s = series[r[1]];
      s.label = r[1];
      s.points.emplace_back(std::stod(r[0]), std::stod(r[4]));
    }
    std::vector<SvgSeries> list;
    const char* colors[] = {"#3366cc", "#cc3333", "#33a02c", "#9467bd"};
    int ci = 0;
    for (auto& [_, s] : series) {
      s.color = colors[ci++ % 4];
      list.push_back(s);
    }
    write_lines_svg(paths.plots_dir() / "lookahead_curve.svg", list,
                    "success rate vs lookahead k");
    scope.output(paths.plots_dir() / "lookahead_curve.svg");
  }

  if (std::filesystem::exists(paths.planning_cost())) {
    auto rows = read_csv(paths.planning_cost());
    std::map<std::string, std::pair<double, int>> acc;  // planner -> (sum per-step, n)
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 10 || r[9] != "1") continue;
      double hops = std::stod(r[2]);
      double expansions = std::stod(r[6]);
      if (hops <= 0) continue;
      auto& slot = acc[r[1]];
      slot.first += expansions / hops;
      slot.second += 1;
    }
    std::vector<SvgBar> bars;
    const char* colors[] = {"#3366cc", "#cc3333", "#33a02c", "#9467bd"};
    int ci = 0;
    for (auto& [name, slot] : acc) {
      SvgBar b;
      b.label = name;
      b.value = slot.second ? slot.first / slot.second : 0;
      b.color = colors[ci++ % 4];
      bars.push_back(b);
    }
    write_bars_svg(paths.plots_dir() / "planning_cost.svg", bars,
                   "mean expansions per plan step");
    scope.output(paths.plots_dir() / "planning_cost.svg");
  }

  auto scatter_path = paths.diagnostics_dir() / "local_score_vs_distance.csv";
  if (std::filesystem::exists(scatter_path)) {
    auto rows = read_csv(scatter_path);
    std::vector<SvgPoint> pts;
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 2) continue;
      pts.push_back(SvgPoint{std::stod(rows[i][0]), std::stod(rows[i][1]), "#cc3333"});
    }
    write_scatter_svg(paths.plots_dir() / "local_score.svg", pts,
                      "local metric score vs ground-truth distance");
    scope.output(paths.plots_dir() / "local_score.svg");
  }
  scope.done();
}

void run_pipeline(const RunConfig& cfg) {
  run_gen_data(cfg);
  run_train_local(cfg);
  run_build_graph(cfg);
  run_train_plan2vec(cfg);
  run_evaluate(cfg);
  run_plan_cost(cfg);
  run_export_embedding(cfg);
  run_plot(cfg);
}

}  // namespace plan2vec
