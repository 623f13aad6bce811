#include "plan2vec/transition_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "plan2vec/binio.hpp"
#include "plan2vec/concurrency.hpp"
#include "plan2vec/planner.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;

float quantize_weight(float d) {
  return std::max(1.0f, std::round(d * 1024.0f)) / 1024.0f;
}

std::optional<float> TransitionGraph::edge_weight(int u, int v) const {
  const auto& edges = adj[size_t(u)];
  auto it = std::lower_bound(edges.begin(), edges.end(), uint32_t(v),
                             [](const Edge& e, uint32_t t) { return e.to < t; });
  if (it != edges.end() && it->to == uint32_t(v)) return it->weight;
  return std::nullopt;
}

TransitionGraph TransitionGraph::reversed() const {
  TransitionGraph r;
  r.n_vertices = n_vertices;
  r.d0 = d0;
  r.n_dataset_edges = n_dataset_edges;
  r.n_inferred_edges = n_inferred_edges;
  r.adj.resize(size_t(n_vertices));
  for (int u = 0; u < n_vertices; ++u)
    for (const Edge& e : adj[size_t(u)])
      r.adj[e.to].push_back(Edge{uint32_t(u), e.weight, e.origin});
  for (auto& edges : r.adj)
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.to < b.to; });
  return r;
}

LatentCacheDistance::LatentCacheDistance(Eigen::MatrixXf latents)
    : latents_(std::move(latents)) {
  sq_norms_ = latents_.rowwise().squaredNorm();
}

Eigen::MatrixXf LatentCacheDistance::block(int r0, int r1, int c0, int c1) const {
  Eigen::MatrixXf dots = latents_.middleRows(r0, r1 - r0) *
                         latents_.middleRows(c0, c1 - c0).transpose();
  Eigen::MatrixXf out(r1 - r0, c1 - c0);
  for (int i = 0; i < r1 - r0; ++i)
    for (int j = 0; j < c1 - c0; ++j) {
      float sq = sq_norms_(r0 + i) + sq_norms_(c0 + j) - 2.0f * dots(i, j);
      out(i, j) = std::sqrt(std::max(sq, 0.0f));
    }
  return out;
}

Eigen::MatrixXf CallbackDistance::block(int r0, int r1, int c0, int c1) const {
  Eigen::MatrixXf out(r1 - r0, c1 - c0);
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) out(i - r0, j - c0) = fn_(i, j);
  return out;
}

TransitionGraph build_graph_from(const std::vector<std::pair<int, int>>& rollout_spans,
                                 const PairwiseDistance& metric, float d0, int workers,
                                 int block) {
  const int n = metric.count();
  if (n <= 0) throw std::invalid_argument("build_graph: empty dataset");
  if (d0 <= 0) throw std::invalid_argument("build_graph: d0 must be > 0");

  TransitionGraph g;
  g.n_vertices = n;
  g.d0 = d0;
  g.adj.resize(size_t(n));

  // dataset transitions, weight exactly 1
  std::unordered_set<uint64_t> dataset_pairs;
  for (auto [start, len] : rollout_spans) {
    for (int t = 0; t + 1 < len; ++t) {
      int u = start + t, v = start + t + 1;
      g.adj[size_t(u)].push_back(Edge{uint32_t(v), 1.0f, EdgeOrigin::Dataset});
      dataset_pairs.insert(uint64_t(u) * uint64_t(n) + uint64_t(v));
      ++g.n_dataset_edges;
    }
  }

  // inferred edges: upper-triangle blocks, mirrored for symmetry
  struct Candidate {
    int i, j;
    float w;
  };
  std::vector<std::pair<int, int>> blocks;
  for (int r0 = 0; r0 < n; r0 += block)
    for (int c0 = r0; c0 < n; c0 += block) blocks.emplace_back(r0, c0);
  std::vector<std::vector<Candidate>> found(blocks.size());

  parallel_for(int(blocks.size()), workers, [&](int bi) {
    auto [r0, c0] = blocks[size_t(bi)];
    int r1 = std::min(r0 + block, n), c1 = std::min(c0 + block, n);
    Eigen::MatrixXf d = metric.block(r0, r1, c0, c1);
    auto& out = found[size_t(bi)];
    for (int i = r0; i < r1; ++i) {
      int jstart = std::max(c0, i + 1);
      for (int j = jstart; j < c1; ++j) {
        float dv = d(i - r0, j - c0);
        if (dv > 0.0f && dv <= d0) out.push_back(Candidate{i, j, quantize_weight(dv)});
      }
    }
  });

  for (const auto& cands : found) {
    for (const Candidate& c : cands) {
      if (!dataset_pairs.count(uint64_t(c.i) * uint64_t(n) + uint64_t(c.j))) {
        g.adj[size_t(c.i)].push_back(Edge{uint32_t(c.j), c.w, EdgeOrigin::Inferred});
        ++g.n_inferred_edges;
      }
      if (!dataset_pairs.count(uint64_t(c.j) * uint64_t(n) + uint64_t(c.i))) {
        g.adj[size_t(c.j)].push_back(Edge{uint32_t(c.i), c.w, EdgeOrigin::Inferred});
        ++g.n_inferred_edges;
      }
    }
  }

  for (auto& edges : g.adj)
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.to < b.to; });
  return g;
}

TransitionGraph build_graph(const TrajectoryDataset& ds, const LocalMetric& metric, float d0,
                            int workers, int block) {
  if (ds.count() == 0) throw std::invalid_argument("build_graph: empty dataset");
  if (metric.variant == LocalMetricVariant::Siamese) {
    LatentCacheDistance dist(metric.embed_all(ds.observations));
    return build_graph_from(ds.rollouts, dist, d0, workers, block);
  }
  // Trunk variant: symmetrize the asymmetric scorer by averaging directions.
  CallbackDistance dist(ds.count(), [&](int i, int j) {
    double ij = local_distance(metric, ds, i, j);
    double ji = local_distance(metric, ds, j, i);
    return float(0.5 * (ij + ji));
  });
  return build_graph_from(ds.rollouts, dist, d0, workers, block);
}

std::optional<double> shortest_path_distance_oracle(const TransitionGraph& g, int s, int t) {
  auto result = dijkstra(g, s, t);
  if (!result.plan) return std::nullopt;
  return result.plan->cost;
}

void TransitionGraph::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = "transition_graph";
  meta["n_vertices"] = n_vertices;
  meta["d0"] = d0;
  meta["n_dataset_edges"] = n_dataset_edges;
  meta["n_inferred_edges"] = n_inferred_edges;
  write_file_atomic(dir / "graph.json", meta.dump(2) + "\n");

  ByteWriter w;
  for (int u = 0; u < n_vertices; ++u)
    for (const Edge& e : adj[size_t(u)]) {
      w.put_u32(uint32_t(u));
      w.put_u32(e.to);
      w.put_f32(e.weight);
      w.put_u8(uint8_t(e.origin));
    }
  write_file_atomic(dir / "edges.bin", w.bytes().data(), w.bytes().size());
}

TransitionGraph TransitionGraph::load(const std::filesystem::path& dir) {
  json meta = json::parse(read_file_text(dir / "graph.json"));
  if (meta.at("kind").get<std::string>() != "transition_graph")
    throw std::runtime_error("not a transition graph artifact: " + dir.string());
  TransitionGraph g;
  g.n_vertices = meta.at("n_vertices").get<int>();
  g.d0 = meta.at("d0").get<float>();
  g.n_dataset_edges = meta.at("n_dataset_edges").get<int64_t>();
  g.n_inferred_edges = meta.at("n_inferred_edges").get<int64_t>();
  g.adj.resize(size_t(g.n_vertices));

  auto bytes = read_file_bytes(dir / "edges.bin");
  constexpr size_t record = 4 + 4 + 4 + 1;
  if (bytes.size() % record != 0)
    throw std::runtime_error("edges.bin size is not a whole number of records");
  ByteReader r(bytes.data(), bytes.size());
  while (r.remaining() > 0) {
    uint32_t u = r.get_u32();
    uint32_t v = r.get_u32();
    float w = r.get_f32();
    uint8_t origin = r.get_u8();
    if (int(u) >= g.n_vertices || int(v) >= g.n_vertices)
      throw std::runtime_error("edges.bin references vertex outside graph");
    g.adj[u].push_back(Edge{v, w, EdgeOrigin(origin)});
  }
  return g;
}

}  // namespace plan2vec
