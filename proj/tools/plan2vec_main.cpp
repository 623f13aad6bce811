#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "plan2vec/config.hpp"
#include "plan2vec/pipeline.hpp"

namespace {

using plan2vec::RunConfig;

std::string default_out_dir(const RunConfig& cfg) {
  const char* root = std::getenv("PLAN2VEC_OUT_ROOT");
  std::string base = root && *root ? root : "runs";
  return base + "/" + cfg.layout + "-seed" + std::to_string(cfg.seed);
}

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string layout;
  int resolution = -1;
  int n_rollouts = -1;
  int horizon = -1;
  long long seed = -1;
  int workers = -1;
  double d0 = -1;
  std::string trainer_mode;
  int trainer_rounds = -1;
  int lookahead_k = -1;
  int latent_dim = -1;
  double metric_p = -1;
  int eval_n_tasks = -1;
  int local_epochs = -1;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run config to load before overrides");
  cmd->add_option("--out", o.out_dir, "output directory (default $PLAN2VEC_OUT_ROOT/<run>)");
  cmd->add_option("--layout", o.layout, "open | table | c-maze");
  cmd->add_option("--resolution", o.resolution, "observation resolution (>= 8)");
  cmd->add_option("--n-rollouts", o.n_rollouts, "number of rollouts");
  cmd->add_option("--horizon", o.horizon, "steps per rollout");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--workers", o.workers, "worker cap for parallel stages");
  cmd->add_option("--d0", o.d0, "local-metric edge threshold");
  cmd->add_option("--trainer-mode", o.trainer_mode, "amortized | fvi");
  cmd->add_option("--rounds", o.trainer_rounds, "training rounds for the global metric");
  cmd->add_option("--lookahead-k", o.lookahead_k, "lookahead depth (fvi / evaluation)");
  cmd->add_option("--latent-dim", o.latent_dim, "embedding dimension");
  cmd->add_option("--p", o.metric_p, "lp exponent of the metric head");
  cmd->add_option("--eval-tasks", o.eval_n_tasks, "number of evaluation tasks");
  cmd->add_option("--local-epochs", o.local_epochs, "local metric training epochs");
}

RunConfig resolve_config(const CliOverrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = RunConfig::load(o.config_path);
  if (!o.layout.empty()) cfg.layout = o.layout;
  if (o.resolution > 0) cfg.resolution = o.resolution;
  if (o.n_rollouts > 0) cfg.n_rollouts = o.n_rollouts;
  if (o.horizon > 0) cfg.horizon = o.horizon;
  if (o.seed >= 0) cfg.seed = uint64_t(o.seed);
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.d0 > 0) cfg.d0 = o.d0;
  if (!o.trainer_mode.empty()) cfg.trainer_mode = o.trainer_mode;
  if (o.trainer_rounds > 0) cfg.trainer_rounds = o.trainer_rounds;
  if (o.lookahead_k > 0) {
    cfg.lookahead_k = o.lookahead_k;
    cfg.eval_k = o.lookahead_k;
  }
  if (o.latent_dim > 0) cfg.latent_dim = o.latent_dim;
  if (o.metric_p > 0) cfg.metric_p = o.metric_p;
  if (o.eval_n_tasks > 0) cfg.eval_n_tasks = o.eval_n_tasks;
  if (o.local_epochs > 0) cfg.local_epochs = o.local_epochs;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline navigation pipeline: rollout datasets, local/global metric "
               "learning, graph planning, and evaluation"};
  app.require_subcommand(1);

  struct Stage {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  };
  const Stage stages[] = {
      {"gen-data", "generate exploratory rollouts and save the dataset", plan2vec::run_gen_data},
      {"train-local", "train the 1-step local metric", plan2vec::run_train_local},
      {"build-graph", "build the transition graph from dataset + local metric",
       plan2vec::run_build_graph},
      {"train-plan2vec", "distill planned path-integrals into the global metric",
       plan2vec::run_train_plan2vec},
      {"evaluate", "goal-reaching success evaluation + diagnostics", plan2vec::run_evaluate},
      {"plan-cost", "planner expansion-cost comparison", plan2vec::run_plan_cost},
      {"export-embedding", "write the latent embedding table", plan2vec::run_export_embedding},
      {"plot", "render SVG plots from CSV artifacts", plan2vec::run_plot},
      {"pipeline", "run every stage in order", plan2vec::run_pipeline},
  };

  std::vector<std::pair<CliOverrides, void (*)(const RunConfig&)>> handlers(std::size(stages));
  for (size_t i = 0; i < std::size(stages); ++i) {
    CLI::App* cmd = app.add_subcommand(stages[i].name, stages[i].help);
    handlers[i].second = stages[i].run;
    add_common_options(cmd, handlers[i].first);
    auto* run = handlers[i].second;
    auto* overrides = &handlers[i].first;
    cmd->callback([run, overrides] {
      RunConfig cfg = resolve_config(*overrides);
      run(cfg);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const plan2vec::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
