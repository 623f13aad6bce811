#ifndef PLAN2VEC_TRAINER_HPP
#define PLAN2VEC_TRAINER_HPP

#include <filesystem>
#include <vector>

#include "plan2vec/nn.hpp"
#include "plan2vec/planner.hpp"
#include "plan2vec/transition_graph.hpp"

namespace plan2vec {

// Siamese embedding phi with an lp head. D(a, b) = |phi(a) - phi(b)|_p and
// the goal-conditioned value is V = -D. Identity, symmetry, and the triangle
// inequality are architecture-forced at every training stage.
struct GlobalMetric {
  ad::EmbeddingNet<float> net;
  // Multiplying D by this recovers graph-cost units (regression targets are
  // divided by it so the network fits O(1) values).
  float distance_scale = 1.0f;
  int input_dim = 0;
  int resolution = 0;

  double p() const { return net.p; }
  int latent_dim() const { return net.output_dim(); }

  Eigen::MatrixXf embed_all(const RowMatf& observations) const;
  double distance_rows(const Eigen::Ref<const Eigen::RowVectorXf>& a,
                       const Eigen::Ref<const Eigen::RowVectorXf>& b) const;
  double latent_distance(const Eigen::MatrixXf& latents, int i, int j) const;

  void save(const std::filesystem::path& dir) const;
  static GlobalMetric load(const std::filesystem::path& dir);
};

struct TrainConfig {
  enum class Mode { Amortized, FittedVI };
  Mode mode = Mode::Amortized;

  int rounds = 60;             // outer loop iterations
  int batch_rollouts = 20;     // goals (amortized) or rollouts (FVI) per round
  int steps_per_rollout = 20;  // targets sampled per goal (amortized)
  int opt_epochs = 6;
  int minibatch = 32;
  double lr = 1e-3;
  double target_scale = 0;  // 0: auto, median goal distance of the dataset

  // FittedVI only (ignored by Amortized):
  int lookahead_k = 1;
  int step_limit = 20;  // h
  int target_sync_interval = 24;  // optimizer updates between target syncs

  int latent_dim = 2;
  double p = 2.0;
  std::vector<int> hidden{256, 128};
  uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path metrics_path;  // per-round jsonl, empty to skip
};

struct RoundLog {
  int round = 0;
  double loss = 0;
  double spearman_probe = 0;
  double cycle_rate = 0;  // FittedVI: fraction of rollouts that revisited a vertex
};

struct TrainResult {
  GlobalMetric metric;
  std::vector<RoundLog> rounds;
  double reachable_fraction = 0;
  double target_scale_used = 0;
};

// Exact distance-to-goal for every vertex reachable toward `goal` (the
// retained Dijkstra search tree, run on the reversed graph so dataset edges
// point backward). Sorted by vertex id; includes (goal, 0).
std::vector<std::pair<int, double>> make_value_targets_amortized(const TransitionGraph& g,
                                                                 int goal);

TrainResult train_amortized(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const TrainConfig& cfg);

TrainResult train_fitted_vi(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const TrainConfig& cfg);

// One greedy lookahead rollout of the bootstrapped variant, exposed for
// inspection: walk toward vg picking argmin-D candidates from the k-hop
// neighborhood, accumulating the traversed edge length.
struct LookaheadRollout {
  std::vector<int> plan;  // aggregated vertex path, starts at vs
  double traversed_length = 0;  // l
  int end_vertex = -1;
  bool reached_goal = false;
  bool cycled = false;  // some vertex was visited twice
};
LookaheadRollout collect_lookahead_rollout(const TransitionGraph& g,
                                           const Eigen::MatrixXf& latents, double p, int vs,
                                           int vg, int lookahead_k, int step_limit);

// Reachable (vertex, goal) pairs with exact graph distances, for correlation
// probes. Deterministic in seed.
struct ReachablePairs {
  std::vector<int> from, to;
  std::vector<double> distance;
};
ReachablePairs sample_reachable_pairs(const TransitionGraph& g, int n_pairs, int n_goals,
                                      uint64_t seed);

// Spearman correlation between D and the exact graph distance over a pair set.
double spearman_probe(const GlobalMetric& m, const TrajectoryDataset& ds,
                      const ReachablePairs& pairs);

// One row per observation: id, latent coordinates, ground-truth position
// (attached for plotting only). Byte-deterministic.
void export_embedding(const GlobalMetric& m, const TrajectoryDataset& ds,
                      const std::filesystem::path& csv_path);

}  // namespace plan2vec

#endif
