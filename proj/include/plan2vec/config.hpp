#ifndef PLAN2VEC_CONFIG_HPP
#define PLAN2VEC_CONFIG_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace plan2vec {

// Flat run configuration; serialized into the output directory before any
// stage runs so a run is reproducible from its saved config alone.
struct RunConfig {
  // dataset
  std::string layout = "c-maze";
  int resolution = 64;
  int n_rollouts = 1000;
  int horizon = 10;
  int n_policies = 20;
  double step_size = 0.1;

  uint64_t seed = 1;
  int workers = 1;

  // local metric
  std::string local_variant = "siamese";  // or "trunk"
  std::string local_objective = "regression";  // or "nce"
  int local_epochs = 40;
  double local_lr = 1e-4;
  std::array<int, 3> local_ratio{1, 1, 2};
  int local_batch = 32;
  std::vector<int> local_hidden{256, 128};
  int local_embed_dim = 32;
  bool local_hinge_far = false;
  int local_k_negatives = 8;
  int holdout_fold = 0;

  // graph
  double d0 = 1.5;
  int graph_block = 1024;

  // global metric training
  std::string trainer_mode = "amortized";  // or "fvi"
  int trainer_rounds = 60;
  int batch_rollouts = 20;
  int steps_per_rollout = 20;
  int opt_epochs = 6;
  int minibatch = 32;
  double trainer_lr = 1e-3;
  double target_scale = 0;  // 0 = auto
  int lookahead_k = 1;
  int step_limit = 20;
  int target_sync_interval = 24;
  int latent_dim = 2;
  double metric_p = 2.0;
  std::vector<int> global_hidden{256, 128};

  // evaluation
  int eval_n_tasks = 200;
  int eval_k = 1;
  std::vector<int> eval_k_values{1, 2, 4};
  double eval_success_radius = 0.15;
  int eval_step_budget = 50;
  int eval_max_goal_hops = 50;
  std::vector<std::string> eval_methods{"Plan2vecValue", "LocalMetricGreedy",
                                        "GraphTruthOracle", "Random"};

  // planning-cost experiment
  std::vector<int> plancost_lengths{4, 8, 12, 16, 20};
  int plancost_queries_per_length = 6;

  std::string out_dir;

  std::string to_json_text() const;
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // content hash of the canonical serialization
  std::string hash() const;
  void validate() const;
};

}  // namespace plan2vec

#endif
