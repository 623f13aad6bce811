#ifndef PLAN2VEC_TRANSITION_GRAPH_HPP
#define PLAN2VEC_TRANSITION_GRAPH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "plan2vec/local_metric.hpp"
#include "plan2vec/maze_env.hpp"

namespace plan2vec {

enum class EdgeOrigin : uint8_t { Dataset = 0, Inferred = 1 };

struct Edge {
  uint32_t to;
  float weight;
  EdgeOrigin origin;
};

// Weighted directed graph over observation indices. Dataset transitions carry
// weight exactly 1; inferred edges carry the local-metric distance, are
// symmetric, and are quantized to multiples of 1/1024 so that path costs sum
// exactly in double precision (the graph-truth metric then satisfies the
// triangle inequality with no floating-point slack).
struct TransitionGraph {
  int n_vertices = 0;
  float d0 = 1.5f;
  std::vector<std::vector<Edge>> adj;  // each list sorted by target id
  int64_t n_dataset_edges = 0;
  int64_t n_inferred_edges = 0;

  const std::vector<Edge>& out(int v) const { return adj[size_t(v)]; }
  std::optional<float> edge_weight(int u, int v) const;
  int64_t n_edges() const { return n_dataset_edges + n_inferred_edges; }

  TransitionGraph reversed() const;

  void save(const std::filesystem::path& dir) const;
  static TransitionGraph load(const std::filesystem::path& dir);
};

float quantize_weight(float d);

// Pairwise distance source for graph construction; lets tests substitute
// synthetic metrics for a trained one.
class PairwiseDistance {
 public:
  virtual ~PairwiseDistance() = default;
  virtual int count() const = 0;
  virtual Eigen::MatrixXf block(int r0, int r1, int c0, int c1) const = 0;
};

// Blocked l2 distances over a precomputed latent cache (Siamese fast path).
class LatentCacheDistance : public PairwiseDistance {
 public:
  explicit LatentCacheDistance(Eigen::MatrixXf latents);
  int count() const override { return int(latents_.rows()); }
  Eigen::MatrixXf block(int r0, int r1, int c0, int c1) const override;

 private:
  Eigen::MatrixXf latents_;
  Eigen::VectorXf sq_norms_;
};

class CallbackDistance : public PairwiseDistance {
 public:
  CallbackDistance(int n, std::function<float(int, int)> fn)
      : n_(n), fn_(std::move(fn)) {}
  int count() const override { return n_; }
  Eigen::MatrixXf block(int r0, int r1, int c0, int c1) const override;

 private:
  int n_;
  std::function<float(int, int)> fn_;
};

// Core constructor: dataset edges from rollout spans, inferred edges from the
// pairwise metric wherever 0 < d <= d0 (both directions; dataset origin wins
// on duplicates).
TransitionGraph build_graph_from(const std::vector<std::pair<int, int>>& rollout_spans,
                                 const PairwiseDistance& metric, float d0, int workers = 1,
                                 int block = 1024);

TransitionGraph build_graph(const TrajectoryDataset& ds, const LocalMetric& metric, float d0,
                            int workers = 1, int block = 1024);

// Exact shortest-path cost; ground-truth target generator and test oracle.
// Unreachable is reported as nullopt.
std::optional<double> shortest_path_distance_oracle(const TransitionGraph& g, int s, int t);

}  // namespace plan2vec

#endif
