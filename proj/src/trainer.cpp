#include "plan2vec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "plan2vec/binio.hpp"
#include "plan2vec/concurrency.hpp"
#include "plan2vec/stats.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;
using ad::Matf;
using ad::Tapef;

Eigen::MatrixXf GlobalMetric::embed_all(const RowMatf& observations) const {
  if (observations.cols() != input_dim)
    throw std::invalid_argument("global metric: observation size mismatch");
  return net.embed_all(observations);
}

double GlobalMetric::distance_rows(const Eigen::Ref<const Eigen::RowVectorXf>& a,
                                   const Eigen::Ref<const Eigen::RowVectorXf>& b) const {
  if (a.size() != input_dim || b.size() != input_dim)
    throw std::invalid_argument("global metric: observation size mismatch");
  Matf za = net.mlp.apply(a), zb = net.mlp.apply(b);
  return net.latent_distance(za.row(0), zb.row(0));
}

double GlobalMetric::latent_distance(const Eigen::MatrixXf& latents, int i, int j) const {
  return net.latent_distance(latents.row(i), latents.row(j));
}

void GlobalMetric::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = "global_metric";
  meta["resolution"] = resolution;
  meta["input_dim"] = input_dim;
  meta["layer_dims"] = net.mlp.dims;
  meta["p"] = net.p;
  meta["latent_dim"] = latent_dim();
  meta["distance_scale"] = distance_scale;
  write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
  auto flat = net.mlp.flatten();
  write_file_atomic(dir / "weights.f32", flat.data(), flat.size() * sizeof(float));
}

GlobalMetric GlobalMetric::load(const std::filesystem::path& dir) {
  json meta = json::parse(read_file_text(dir / "model.json"));
  if (meta.at("kind").get<std::string>() != "global_metric")
    throw std::runtime_error("not a global metric checkpoint: " + dir.string());
  GlobalMetric m;
  m.resolution = meta.at("resolution").get<int>();
  m.input_dim = meta.at("input_dim").get<int>();
  m.distance_scale = meta.at("distance_scale").get<float>();
  m.net.p = meta.at("p").get<double>();
  Rng dummy(0);
  m.net.mlp.init(meta.at("layer_dims").get<std::vector<int>>(), dummy);
  auto bytes = read_file_bytes(dir / "weights.f32");
  std::vector<float> flat(bytes.size() / sizeof(float));
  std::memcpy(flat.data(), bytes.data(), bytes.size());
  m.net.mlp.unflatten(flat);
  return m;
}

std::vector<std::pair<int, double>> make_value_targets_amortized(const TransitionGraph& g,
                                                                 int goal) {
  TransitionGraph rev = g.reversed();
  auto res = dijkstra(rev, goal, kAllVertices);
  std::vector<std::pair<int, double>> targets;
  targets.reserve(res.stats.settled_order.size());
  for (int v : res.stats.settled_order)
    targets.emplace_back(v, res.stats.settled_distance[size_t(v)]);
  std::sort(targets.begin(), targets.end());
  return targets;
}

namespace {

struct Sample {
  int from, goal;
  double target;  // graph-cost units
};

struct Probe {
  double reachable_fraction = 0;
  double median_distance = 1;
  ReachablePairs pairs;
};

// Dijkstra sweeps from a few goals over the reversed graph: reachability
// fraction, median goal distance (target scaling), and a fixed correlation
// probe set.
Probe probe_graph(const TransitionGraph& rev, int n_goals, int pairs_per_goal,
                  uint64_t seed) {
  Probe probe;
  Rng rng(hash_combine(seed, 0x9806e));
  const int n = rev.n_vertices;
  std::vector<double> sampled_distances;
  int64_t settled_total = 0;
  for (int gi = 0; gi < n_goals; ++gi) {
    int goal = rng.index(n);
    auto res = dijkstra(rev, goal, kAllVertices);
    const auto& order = res.stats.settled_order;
    settled_total += int64_t(order.size());
    for (int i = 0; i < pairs_per_goal; ++i) {
      int v = order[size_t(rng.index(int(order.size())))];
      if (v == goal) continue;
      double d = res.stats.settled_distance[size_t(v)];
      sampled_distances.push_back(d);
      probe.pairs.from.push_back(v);
      probe.pairs.to.push_back(goal);
      probe.pairs.distance.push_back(d);
    }
  }
  probe.reachable_fraction = double(settled_total) / (double(n_goals) * double(n));
  if (!sampled_distances.empty()) probe.median_distance = median(sampled_distances);
  return probe;
}

GlobalMetric make_global(const TrajectoryDataset& ds, const TrainConfig& cfg, Rng& rng) {
  GlobalMetric m;
  m.resolution = ds.resolution;
  m.input_dim = ds.obs_dim();
  m.net.p = cfg.p;
  std::vector<int> dims{m.input_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.latent_dim);
  m.net.mlp.init(dims, rng);
  return m;
}

Matf gather_rows(const RowMatf& obs, const std::vector<int>& idx) {
  Matf out(Eigen::Index(idx.size()), obs.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(Eigen::Index(r)) = obs.row(idx[r]);
  return out;
}

std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t(0));
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

void check_finite(double loss, int round, int step) {
  if (std::isfinite(loss)) return;
  std::ostringstream os;
  os << "training diverged: non-finite loss at round " << round << ", update " << step;
  throw std::runtime_error(os.str());
}

// One minibatch gradient step of smooth L1 between D(a, b) and scaled targets.
double optimize_minibatch(GlobalMetric& m, ad::Adam<float>& opt, const TrajectoryDataset& ds,
                          const std::vector<Sample>& samples, const std::vector<size_t>& order,
                          size_t begin, size_t end, double scale) {
  std::vector<int> from, goal;
  Matf y(Eigen::Index(end - begin), 1);
  for (size_t i = begin; i < end; ++i) {
    const Sample& s = samples[order[i]];
    from.push_back(s.from);
    goal.push_back(s.goal);
    y(Eigen::Index(i - begin), 0) = float(s.target / scale);
  }
  Matf A = gather_rows(ds.observations, from);
  Matf B = gather_rows(ds.observations, goal);
  Tapef tape;
  auto vars = m.net.mlp.register_params(tape);
  auto za = m.net.mlp.forward(tape, vars, tape.constant(A));
  auto zb = m.net.mlp.forward(tape, vars, tape.constant(B));
  auto d = tape.rowwise_lp_norm(tape.sub(za, zb), m.net.p);
  auto loss = tape.mean(tape.smooth_l1(d, tape.constant(y)));
  tape.backward(loss);
  ad::apply_gradients(m.net.mlp, vars, tape, opt);
  return double(tape.value(loss)(0, 0));
}

struct RoundLogger {
  std::vector<std::string> lines;
  void log(const RoundLog& r, double reachable_fraction, TrainConfig::Mode mode) {
    json row;
    row["round"] = r.round;
    row["loss"] = r.loss;
    row["spearman_probe"] = r.spearman_probe;
    row["reachable_fraction"] = reachable_fraction;
    if (mode == TrainConfig::Mode::FittedVI) row["cycle_rate"] = r.cycle_rate;
    lines.push_back(row.dump());
  }
  void flush(const std::filesystem::path& path) {
    if (path.empty()) return;
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_file_atomic(path, text);
  }
};

}  // namespace

ReachablePairs sample_reachable_pairs(const TransitionGraph& g, int n_pairs, int n_goals,
                                      uint64_t seed) {
  TransitionGraph rev = g.reversed();
  Rng rng(hash_combine(seed, 0x4ac4ab1e));
  ReachablePairs out;
  int per_goal = (n_pairs + n_goals - 1) / n_goals;
  for (int gi = 0; gi < n_goals && int(out.from.size()) < n_pairs; ++gi) {
    int goal = rng.index(g.n_vertices);
    auto res = dijkstra(rev, goal, kAllVertices);
    const auto& order = res.stats.settled_order;
    if (order.size() < 2) continue;
    for (int i = 0; i < per_goal && int(out.from.size()) < n_pairs; ++i) {
      int v = order[size_t(rng.index(int(order.size())))];
      if (v == goal) continue;
      out.from.push_back(v);
      out.to.push_back(goal);
      out.distance.push_back(res.stats.settled_distance[size_t(v)]);
    }
  }
  return out;
}

double spearman_probe(const GlobalMetric& m, const TrajectoryDataset& ds,
                      const ReachablePairs& pairs) {
  Matf A = gather_rows(ds.observations, pairs.from);
  Matf B = gather_rows(ds.observations, pairs.to);
  Matf za = m.net.mlp.apply(A), zb = m.net.mlp.apply(B);
  std::vector<double> dphi(pairs.from.size());
  for (size_t i = 0; i < pairs.from.size(); ++i)
    dphi[i] = m.net.latent_distance(za.row(Eigen::Index(i)), zb.row(Eigen::Index(i)));
  return spearman(dphi, pairs.distance);
}

TrainResult train_amortized(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const TrainConfig& cfg) {
  Rng rng(hash_combine(cfg.seed, 0xa304));
  TrainResult result;
  result.metric = make_global(ds, cfg, rng);
  GlobalMetric& m = result.metric;

  TransitionGraph rev = g.reversed();
  Probe probe = probe_graph(rev, 8, 64, cfg.seed);
  result.reachable_fraction = probe.reachable_fraction;
  if (probe.reachable_fraction < 0.5) {
    std::ostringstream os;
    os << "graph too disconnected for distillation: reachable fraction "
       << probe.reachable_fraction << " < 0.5";
    throw std::runtime_error(os.str());
  }
  const double scale = cfg.target_scale > 0 ? cfg.target_scale : probe.median_distance;
  result.target_scale_used = scale;

  ad::Adam<float> opt;
  opt.lr = cfg.lr;
  RoundLogger logger;
  int updates = 0;

  for (int round = 0; round < cfg.rounds; ++round) {
    // one Dijkstra sweep per goal; the settled tree is the training data
    std::vector<int> goals(size_t(cfg.batch_rollouts));
    for (int i = 0; i < cfg.batch_rollouts; ++i) goals[size_t(i)] = rng.index(g.n_vertices);
    std::vector<std::vector<Sample>> per_goal(goals.size());
    parallel_for(int(goals.size()), cfg.workers, [&](int gi) {
      int goal = goals[size_t(gi)];
      auto res = dijkstra(rev, goal, kAllVertices);
      const auto& order = res.stats.settled_order;
      Rng sub(hash_combine(hash_combine(cfg.seed, uint64_t(round)), uint64_t(gi)));
      auto& out = per_goal[size_t(gi)];
      int take = std::min<int>(cfg.steps_per_rollout, int(order.size()));
      for (int i = 0; i < take; ++i) {
        int v = order[size_t(sub.index(int(order.size())))];
        out.push_back(Sample{v, goal, res.stats.settled_distance[size_t(v)]});
      }
    });
    std::vector<Sample> samples;
    for (const auto& part : per_goal) samples.insert(samples.end(), part.begin(), part.end());

    double loss_sum = 0;
    int loss_count = 0;
    for (int epoch = 0; epoch < cfg.opt_epochs; ++epoch) {
      auto order = shuffled_indices(samples.size(), rng);
      for (size_t at = 0; at < samples.size(); at += size_t(cfg.minibatch)) {
        size_t end = std::min(samples.size(), at + size_t(cfg.minibatch));
        double lv = optimize_minibatch(m, opt, ds, samples, order, at, end, scale);
        check_finite(lv, round, updates);
        loss_sum += lv;
        ++loss_count;
        ++updates;
      }
    }

    RoundLog log;
    log.round = round;
    log.loss = loss_count ? loss_sum / loss_count : 0;
    log.spearman_probe = spearman_probe(m, ds, probe.pairs);
    result.rounds.push_back(log);
    logger.log(log, result.reachable_fraction, cfg.mode);
  }

  m.distance_scale = float(scale);
  logger.flush(cfg.metrics_path);
  return result;
}

LookaheadRollout collect_lookahead_rollout(const TransitionGraph& g,
                                           const Eigen::MatrixXf& latents, double p, int vs,
                                           int vg, int lookahead_k, int step_limit) {
  LookaheadRollout roll;
  roll.plan.push_back(vs);
  std::unordered_set<int> seen{vs};
  int v = vs;
  int hops = 0;
  Eigen::RowVectorXf zg = latents.row(vg);
  auto dist_to_goal = [&](int u) {
    Eigen::RowVectorXf diff = latents.row(u) - zg;
    if (p == 2.0) return double(diff.norm());
    if (p == 1.0) return double(diff.array().abs().sum());
    double acc = 0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
      double ax = std::max(std::abs(double(diff(i))), 1e-12);
      acc += std::exp(p * std::log(ax));
    }
    return std::exp(std::log(acc) / p);
  };

  while (v != vg && hops < step_limit) {
    BfsTree nb = bfs_neighborhood_tree(g, v, lookahead_k);
    if (nb.vertices.empty()) break;
    int best = -1;
    double best_d = kInfCost;
    for (int u : nb.vertices) {
      double d = dist_to_goal(u);
      if (d < best_d) {  // sorted candidates: ties keep the smaller id
        best_d = d;
        best = u;
      }
    }
    std::vector<int> sub;
    for (int u = best; u != -1; u = nb.parent[size_t(u)]) sub.push_back(u);
    std::reverse(sub.begin(), sub.end());
    for (size_t i = 0; i + 1 < sub.size(); ++i) {
      auto w = g.edge_weight(sub[i], sub[i + 1]);
      roll.traversed_length += double(*w);
    }
    for (size_t i = 1; i < sub.size(); ++i) {
      if (!seen.insert(sub[i]).second) roll.cycled = true;
      roll.plan.push_back(sub[i]);
      ++hops;
    }
    v = best;
  }
  roll.end_vertex = v;
  roll.reached_goal = (v == vg);
  return roll;
}

TrainResult train_fitted_vi(const TransitionGraph& g, const TrajectoryDataset& ds,
                            const TrainConfig& cfg) {
  if (cfg.lookahead_k < 1) throw std::invalid_argument("fitted vi: lookahead_k >= 1");
  if (cfg.step_limit < 1) throw std::invalid_argument("fitted vi: step_limit >= 1");
  Rng rng(hash_combine(cfg.seed, 0xf71));
  TrainResult result;
  result.metric = make_global(ds, cfg, rng);
  GlobalMetric& m = result.metric;

  TransitionGraph rev = g.reversed();
  Probe probe = probe_graph(rev, 8, 64, cfg.seed);
  result.reachable_fraction = probe.reachable_fraction;
  if (probe.reachable_fraction < 0.5) {
    std::ostringstream os;
    os << "graph too disconnected for distillation: reachable fraction "
       << probe.reachable_fraction << " < 0.5";
    throw std::runtime_error(os.str());
  }
  const double scale = cfg.target_scale > 0 ? cfg.target_scale : probe.median_distance;
  result.target_scale_used = scale;

  // frozen snapshot plus its latent cache; only the cache is consulted
  ad::EmbeddingNet<float> target_net{m.net.mlp, cfg.p};
  Eigen::MatrixXf target_latents = target_net.embed_all(ds.observations);

  ad::Adam<float> opt;
  opt.lr = cfg.lr;
  RoundLogger logger;
  int updates = 0;

  struct ViSample {
    int vs, vg, v_end;
    double length;
    bool reached;
  };

  for (int round = 0; round < cfg.rounds; ++round) {
    Eigen::MatrixXf live_latents = m.net.embed_all(ds.observations);
    std::vector<ViSample> samples;
    int cycled = 0;
    for (int i = 0; i < cfg.batch_rollouts; ++i) {
      int vs = rng.index(g.n_vertices);
      int vg = vs;
      while (vg == vs) vg = rng.index(g.n_vertices);
      auto roll = collect_lookahead_rollout(g, live_latents, cfg.p, vs, vg, cfg.lookahead_k,
                                            cfg.step_limit);
      if (roll.cycled) ++cycled;
      samples.push_back(ViSample{vs, vg, roll.end_vertex, roll.traversed_length,
                                 roll.reached_goal});
    }

    double loss_sum = 0;
    int loss_count = 0;
    for (int epoch = 0; epoch < cfg.opt_epochs; ++epoch) {
      auto order = shuffled_indices(samples.size(), rng);
      for (size_t at = 0; at < samples.size(); at += size_t(cfg.minibatch)) {
        size_t end = std::min(samples.size(), at + size_t(cfg.minibatch));
        // bootstrapped targets; the bootstrap term vanishes at the goal
        std::vector<Sample> batch;
        for (size_t si = at; si < end; ++si) {
          const ViSample& s = samples[order[si]];
          double boot = s.reached ? 0.0
                                  : target_net.latent_distance(target_latents.row(s.v_end),
                                                               target_latents.row(s.vg)) *
                                        scale;
          batch.push_back(Sample{s.vs, s.vg, s.length + boot});
        }
        std::vector<size_t> ident(batch.size());
        std::iota(ident.begin(), ident.end(), size_t(0));
        double lv = optimize_minibatch(m, opt, ds, batch, ident, 0, batch.size(), scale);
        check_finite(lv, round, updates);
        loss_sum += lv;
        ++loss_count;
        ++updates;
        if (updates % cfg.target_sync_interval == 0) {
          target_net.mlp = m.net.mlp;
          target_latents = target_net.embed_all(ds.observations);
        }
      }
    }

    RoundLog log;
    log.round = round;
    log.loss = loss_count ? loss_sum / loss_count : 0;
    log.spearman_probe = spearman_probe(m, ds, probe.pairs);
    log.cycle_rate = cfg.batch_rollouts ? double(cycled) / cfg.batch_rollouts : 0;
    result.rounds.push_back(log);
    logger.log(log, result.reachable_fraction, cfg.mode);
  }

  m.distance_scale = float(scale);
  logger.flush(cfg.metrics_path);
  return result;
}

void export_embedding(const GlobalMetric& m, const TrajectoryDataset& ds,
                      const std::filesystem::path& csv_path) {
  Eigen::MatrixXf latents = m.embed_all(ds.observations);
  std::string out;
  out += "id";
  for (int d = 0; d < m.latent_dim(); ++d) out += ",z" + std::to_string(d);
  out += ",gt_x,gt_y\n";
  char buf[64];
  for (int i = 0; i < ds.count(); ++i) {
    out += std::to_string(i);
    for (int d = 0; d < m.latent_dim(); ++d) {
      std::snprintf(buf, sizeof(buf), ",%.9g", double(latents(i, d)));
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g\n", double(ds.positions(i, 0)),
                  double(ds.positions(i, 1)));
    out += buf;
  }
  write_file_atomic(csv_path, out);
}

}  // namespace plan2vec
