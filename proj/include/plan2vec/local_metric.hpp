#ifndef PLAN2VEC_LOCAL_METRIC_HPP
#define PLAN2VEC_LOCAL_METRIC_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "plan2vec/maze_env.hpp"
#include "plan2vec/nn.hpp"

namespace plan2vec {

// Labeled observation pairs: 0 identical, 1 in-trajectory neighbors, 2 pairs
// drawn from distinct random positions of the dataset.
struct PairBatch {
  std::vector<int> anchor;
  std::vector<int> other;
  std::vector<int> label;
  int size() const { return int(anchor.size()); }
};

PairBatch sample_pairs(const TrajectoryDataset& ds, std::array<int, 3> ratio, int batch,
                       uint64_t seed);
// Same, restricted to a subset of rollouts (used for train/held-out splits).
PairBatch sample_pairs_from(const TrajectoryDataset& ds, const std::vector<int>& rollout_ids,
                            std::array<int, 3> ratio, int batch, Rng& rng);

enum class LocalMetricVariant { Siamese, Trunk };

// One-step reachability scorer d(x, x'). The Siamese variant embeds each
// observation and takes an l2 head, which forces d(x, x) = 0 and symmetry;
// the trunk variant scores a stacked pair through an MLP with a softplus
// output clamp.
struct LocalMetric {
  LocalMetricVariant variant = LocalMetricVariant::Siamese;
  ad::EmbeddingNet<float> embedder;  // Siamese
  ad::Mlp<float> trunk;              // Trunk (input 2 * obs_dim, output 1)
  float threshold_d0 = 1.5f;
  int resolution = 0;
  int input_dim = 0;

  double distance_rows(const Eigen::Ref<const Eigen::RowVectorXf>& a,
                       const Eigen::Ref<const Eigen::RowVectorXf>& b) const;

  // Latent cache for the Siamese variant ([n, embed_dim]); throws for Trunk.
  Eigen::MatrixXf embed_all(const RowMatf& observations) const;

  void save(const std::filesystem::path& dir) const;
  static LocalMetric load(const std::filesystem::path& dir);
};

double local_distance(const LocalMetric& metric, const TrajectoryDataset& ds, int i, int j);

struct LocalMetricConfig {
  int epochs = 40;
  double lr = 1e-4;
  std::array<int, 3> ratio{1, 1, 2};
  int batch = 32;
  LocalMetricVariant variant = LocalMetricVariant::Siamese;
  std::vector<int> hidden{256, 128};
  int embed_dim = 32;
  bool hinge_far = false;  // hinge loss on the far class instead of smooth L1
  int k_negatives = 8;     // contrastive objective only
  int holdout_fold = 0;    // rollouts with index % 10 == fold are held out
  uint64_t seed = 1;
  std::filesystem::path metrics_path;  // per-epoch jsonl, empty to skip
};

struct LocalTrainResult {
  LocalMetric metric;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
  double holdout_accuracy = 0;  // final, on a larger held-out sample
};

// Three-class distance regression (the default objective): smooth L1 of
// (d - nominal label) over {0, 1, 2}-labeled pairs.
LocalTrainResult train_local_metric(const TrajectoryDataset& ds, const LocalMetricConfig& cfg);

// Contrastive alternative: similarity S = -d, softmax of the in-context
// positive against k random negatives.
LocalTrainResult train_local_metric_nce(const TrajectoryDataset& ds,
                                        const LocalMetricConfig& cfg);

// Fraction of held-out pairs whose near/far call at the given threshold
// matches the sampling label (labels 0 and 1 count as near).
double pair_classification_accuracy(const LocalMetric& metric, const TrajectoryDataset& ds,
                                    const std::vector<int>& rollout_ids, int n_pairs,
                                    uint64_t seed, double threshold = 1.5);

std::vector<int> holdout_rollouts(const TrajectoryDataset& ds, int fold);
std::vector<int> training_rollouts(const TrajectoryDataset& ds, int fold);

}  // namespace plan2vec

#endif
