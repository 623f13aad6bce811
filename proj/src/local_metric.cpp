#include "plan2vec/local_metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "plan2vec/binio.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;
using ad::Matf;
using ad::Tapef;

namespace {

std::array<int, 3> ratio_counts(std::array<int, 3> ratio, int batch) {
  int s = ratio[0] + ratio[1] + ratio[2];
  if (s <= 0) throw std::invalid_argument("sample_pairs: ratio must sum to > 0");
  if (batch < s)
    throw std::invalid_argument("sample_pairs: batch " + std::to_string(batch) +
                                " smaller than ratio sum " + std::to_string(s));
  std::array<int, 3> counts{};
  std::array<double, 3> frac{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = double(batch) * ratio[i] / s;
    counts[i] = int(exact);
    frac[i] = exact - counts[i];
    assigned += counts[i];
  }
  while (assigned < batch) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (frac[i] > frac[best]) best = i;
    ++counts[best];
    frac[best] = -1;
    ++assigned;
  }
  return counts;
}

float softplus_scalar(float x) {
  return float(std::max(double(x), 0.0) + std::log1p(std::exp(-std::abs(double(x)))));
}

Matf gather_rows(const RowMatf& obs, const std::vector<int>& idx) {
  Matf out(Eigen::Index(idx.size()), obs.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(Eigen::Index(r)) = obs.row(idx[r]);
  return out;
}

// Distances for index pairs under either variant, batched.
Eigen::VectorXd batch_distances(const LocalMetric& m, const TrajectoryDataset& ds,
                                const std::vector<int>& a, const std::vector<int>& b) {
  Matf A = gather_rows(ds.observations, a);
  Matf B = gather_rows(ds.observations, b);
  Eigen::VectorXd out(Eigen::Index(a.size()));
  if (m.variant == LocalMetricVariant::Siamese) {
    Matf za = m.embedder.mlp.apply(A);
    Matf zb = m.embedder.mlp.apply(B);
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = m.embedder.latent_distance(za.row(i), zb.row(i));
  } else {
    Matf X(A.rows(), A.cols() + B.cols());
    X << A, B;
    Matf raw = m.trunk.apply(X);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = double(softplus_scalar(raw(i, 0)));
  }
  return out;
}

struct EpochLogger {
  std::vector<std::string> lines;
  void log(int epoch, double loss, double accuracy) {
    json row;
    row["epoch"] = epoch;
    row["loss"] = loss;
    row["holdout_accuracy"] = accuracy;
    lines.push_back(row.dump());
  }
  void flush(const std::filesystem::path& path) {
    if (path.empty()) return;
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_file_atomic(path, text);
  }
};

void check_finite(double loss, int epoch, int step) {
  if (std::isfinite(loss)) return;
  std::ostringstream os;
  os << "local metric training diverged: non-finite loss " << loss << " at epoch " << epoch
     << ", step " << step;
  throw std::runtime_error(os.str());
}

}  // namespace

std::vector<int> holdout_rollouts(const TrajectoryDataset& ds, int fold) {
  std::vector<int> out;
  for (int r = 0; r < int(ds.rollouts.size()); ++r)
    if (r % 10 == fold) out.push_back(r);
  return out;
}

std::vector<int> training_rollouts(const TrajectoryDataset& ds, int fold) {
  std::vector<int> out;
  for (int r = 0; r < int(ds.rollouts.size()); ++r)
    if (r % 10 != fold) out.push_back(r);
  return out;
}

PairBatch sample_pairs_from(const TrajectoryDataset& ds, const std::vector<int>& rollout_ids,
                            std::array<int, 3> ratio, int batch, Rng& rng) {
  if (ds.rollouts.size() < 2)
    throw std::invalid_argument("sample_pairs: dataset needs at least 2 rollouts");
  const std::array<int, 3> counts = ratio_counts(ratio, batch);

  // flat observation indices available through the chosen rollouts
  std::vector<int> flat;
  for (int r : rollout_ids) {
    auto [start, len] = ds.rollouts[size_t(r)];
    for (int i = 0; i < len; ++i) flat.push_back(start + i);
  }
  if (flat.empty()) throw std::invalid_argument("sample_pairs: empty rollout subset");

  PairBatch out;
  out.anchor.reserve(size_t(batch));
  for (int i = 0; i < counts[0]; ++i) {
    int a = flat[rng.index(int(flat.size()))];
    out.anchor.push_back(a);
    out.other.push_back(a);
    out.label.push_back(0);
  }
  for (int i = 0; i < counts[1]; ++i) {
    int r = rollout_ids[size_t(rng.index(int(rollout_ids.size())))];
    auto [start, len] = ds.rollouts[size_t(r)];
    int t = rng.index(len - 1);
    out.anchor.push_back(start + t);
    out.other.push_back(start + t + 1);
    out.label.push_back(1);
  }
  for (int i = 0; i < counts[2]; ++i) {
    int a = flat[rng.index(int(flat.size()))];
    int b = a;
    while (b == a) b = flat[rng.index(int(flat.size()))];
    out.anchor.push_back(a);
    out.other.push_back(b);
    out.label.push_back(2);
  }
  return out;
}

PairBatch sample_pairs(const TrajectoryDataset& ds, std::array<int, 3> ratio, int batch,
                       uint64_t seed) {
  std::vector<int> all(ds.rollouts.size());
  std::iota(all.begin(), all.end(), 0);
  Rng rng(seed);
  return sample_pairs_from(ds, all, ratio, batch, rng);
}

double LocalMetric::distance_rows(const Eigen::Ref<const Eigen::RowVectorXf>& a,
                                  const Eigen::Ref<const Eigen::RowVectorXf>& b) const {
  if (a.size() != input_dim || b.size() != input_dim)
    throw std::invalid_argument("local metric: observation size " + std::to_string(a.size()) +
                                " does not match trained input dim " +
                                std::to_string(input_dim));
  if (variant == LocalMetricVariant::Siamese) {
    Matf za = embedder.mlp.apply(a);
    Matf zb = embedder.mlp.apply(b);
    return embedder.latent_distance(za.row(0), zb.row(0));
  }
  Matf x(1, 2 * input_dim);
  x << a, b;
  return double(softplus_scalar(trunk.apply(x)(0, 0)));
}

Eigen::MatrixXf LocalMetric::embed_all(const RowMatf& observations) const {
  if (variant != LocalMetricVariant::Siamese)
    throw std::logic_error("embed_all: only the Siamese variant has an embedding cache");
  if (observations.cols() != input_dim)
    throw std::invalid_argument("local metric: observation size mismatch");
  return embedder.embed_all(observations);
}

double local_distance(const LocalMetric& metric, const TrajectoryDataset& ds, int i, int j) {
  return metric.distance_rows(ds.observations.row(i), ds.observations.row(j));
}

double pair_classification_accuracy(const LocalMetric& metric, const TrajectoryDataset& ds,
                                    const std::vector<int>& rollout_ids, int n_pairs,
                                    uint64_t seed, double threshold) {
  Rng rng(seed);
  PairBatch pairs = sample_pairs_from(ds, rollout_ids, {1, 1, 2}, n_pairs, rng);
  Eigen::VectorXd d = batch_distances(metric, ds, pairs.anchor, pairs.other);
  int correct = 0;
  for (int i = 0; i < pairs.size(); ++i) {
    bool near_true = pairs.label[size_t(i)] <= 1;
    bool near_pred = d(i) < threshold;
    if (near_true == near_pred) ++correct;
  }
  return double(correct) / double(pairs.size());
}

namespace {

LocalMetric make_metric(const TrajectoryDataset& ds, const LocalMetricConfig& cfg, Rng& rng) {
  LocalMetric m;
  m.variant = cfg.variant;
  m.resolution = ds.resolution;
  m.input_dim = ds.obs_dim();
  m.threshold_d0 = 1.5f;
  if (cfg.variant == LocalMetricVariant::Siamese) {
    std::vector<int> dims{m.input_dim};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(cfg.embed_dim);
    m.embedder.p = 2.0;
    m.embedder.mlp.init(dims, rng);
  } else {
    std::vector<int> dims{2 * m.input_dim};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    m.trunk.init(dims, rng);
  }
  return m;
}

// Forward the pair distance column [n, 1] on the tape for either variant.
Tapef::Var pair_distance_var(LocalMetric& m, Tapef& tape, const ad::Mlp<float>::Vars& vars,
                             const Matf& A, const Matf& B) {
  if (m.variant == LocalMetricVariant::Siamese) {
    auto xa = tape.constant(A);
    auto xb = tape.constant(B);
    auto za = m.embedder.mlp.forward(tape, vars, xa);
    auto zb = m.embedder.mlp.forward(tape, vars, xb);
    return tape.rowwise_lp_norm(tape.sub(za, zb), m.embedder.p);
  }
  Matf X(A.rows(), A.cols() + B.cols());
  X << A, B;
  auto x = tape.constant(X);
  return tape.softplus(m.trunk.forward(tape, vars, x));
}

ad::Mlp<float>& net_of(LocalMetric& m) {
  return m.variant == LocalMetricVariant::Siamese ? m.embedder.mlp : m.trunk;
}

}  // namespace

LocalTrainResult train_local_metric(const TrajectoryDataset& ds, const LocalMetricConfig& cfg) {
  Rng rng(hash_combine(cfg.seed, 0x10c41));
  LocalTrainResult result;
  result.metric = make_metric(ds, cfg, rng);
  LocalMetric& m = result.metric;
  ad::Mlp<float>& net = net_of(m);

  const std::vector<int> train_ids = training_rollouts(ds, cfg.holdout_fold);
  std::vector<int> eval_ids = holdout_rollouts(ds, cfg.holdout_fold);
  if (eval_ids.empty()) eval_ids = train_ids;  // tiny datasets: report train accuracy

  ad::Adam<float> opt;
  opt.lr = cfg.lr;
  const int steps_per_epoch = std::max(1, ds.count() / cfg.batch);
  EpochLogger logger;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      PairBatch pairs = sample_pairs_from(ds, train_ids, cfg.ratio, cfg.batch, rng);
      Matf A = gather_rows(ds.observations, pairs.anchor);
      Matf B = gather_rows(ds.observations, pairs.other);
      Matf labels(pairs.size(), 1);
      for (int i = 0; i < pairs.size(); ++i) labels(i, 0) = float(pairs.label[size_t(i)]);

      Tapef tape;
      auto vars = net.register_params(tape);
      auto d = pair_distance_var(m, tape, vars, A, B);
      Tapef::Var loss;
      if (!cfg.hinge_far) {
        loss = tape.mean(tape.smooth_l1(d, tape.constant(labels)));
      } else {
        // near classes regress to the nominal label; the far class pushes
        // d above the margin with a hinge
        Matf near_mask(pairs.size(), 1), far_mask(pairs.size(), 1);
        for (int i = 0; i < pairs.size(); ++i) {
          near_mask(i, 0) = pairs.label[size_t(i)] <= 1 ? 1.f : 0.f;
          far_mask(i, 0) = 1.f - near_mask(i, 0);
        }
        auto sl1 = tape.smooth_l1(d, tape.constant(labels));
        auto near_term = tape.sum(tape.mul_elem(sl1, tape.constant(near_mask)));
        auto hinge = tape.relu(tape.sub(tape.constant(Matf::Constant(pairs.size(), 1, 2.f)), d));
        auto far_term = tape.sum(tape.mul_elem(hinge, tape.constant(far_mask)));
        loss = tape.scale(tape.add(near_term, far_term), 1.f / float(pairs.size()));
      }
      tape.backward(loss);
      double lv = double(tape.value(loss)(0, 0));
      check_finite(lv, epoch, step);
      loss_sum += lv;
      ad::apply_gradients(net, vars, tape, opt);
    }
    double epoch_loss = loss_sum / steps_per_epoch;
    double acc = pair_classification_accuracy(m, ds, eval_ids, 512,
                                              hash_combine(cfg.seed, 0xacc0 + uint64_t(epoch)));
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_accuracy.push_back(acc);
    logger.log(epoch, epoch_loss, acc);
  }

  result.holdout_accuracy = pair_classification_accuracy(
      m, ds, eval_ids, 2048, hash_combine(cfg.seed, 0xf17a1));
  logger.flush(cfg.metrics_path);
  return result;
}

LocalTrainResult train_local_metric_nce(const TrajectoryDataset& ds,
                                        const LocalMetricConfig& cfg) {
  if (cfg.k_negatives < 1)
    throw std::invalid_argument("nce: k_negatives must be >= 1");
  Rng rng(hash_combine(cfg.seed, 0x9ce));
  LocalTrainResult result;
  result.metric = make_metric(ds, cfg, rng);
  LocalMetric& m = result.metric;
  ad::Mlp<float>& net = net_of(m);

  const std::vector<int> train_ids = training_rollouts(ds, cfg.holdout_fold);
  std::vector<int> eval_ids = holdout_rollouts(ds, cfg.holdout_fold);
  if (eval_ids.empty()) eval_ids = train_ids;

  // flat index pool for negatives
  std::vector<int> flat;
  for (int r : train_ids) {
    auto [start, len] = ds.rollouts[size_t(r)];
    for (int i = 0; i < len; ++i) flat.push_back(start + i);
  }

  ad::Adam<float> opt;
  opt.lr = cfg.lr;
  const int steps_per_epoch = std::max(1, ds.count() / cfg.batch);
  EpochLogger logger;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<int> anchors, positives;
      std::vector<std::vector<int>> negatives(size_t(cfg.k_negatives));
      for (int i = 0; i < cfg.batch; ++i) {
        int r = train_ids[size_t(rng.index(int(train_ids.size())))];
        auto [start, len] = ds.rollouts[size_t(r)];
        int t = rng.index(len - 1);
        anchors.push_back(start + t);
        positives.push_back(start + t + 1);
        for (int k = 0; k < cfg.k_negatives; ++k)
          negatives[size_t(k)].push_back(flat[size_t(rng.index(int(flat.size())))]);
      }
      Matf A = gather_rows(ds.observations, anchors);

      Tapef tape;
      auto vars = net.register_params(tape);
      std::vector<Tapef::Var> logit_cols;
      auto score_col = [&](const std::vector<int>& others) {
        Matf B = gather_rows(ds.observations, others);
        auto d = pair_distance_var(m, tape, vars, A, B);
        return tape.scale(d, -1.f);  // similarity S = -d
      };
      logit_cols.push_back(score_col(positives));
      for (int k = 0; k < cfg.k_negatives; ++k) logit_cols.push_back(score_col(negatives[size_t(k)]));
      auto loss = tape.nce_loss(tape.hstack(logit_cols));
      tape.backward(loss);
      double lv = double(tape.value(loss)(0, 0));
      check_finite(lv, epoch, step);
      loss_sum += lv;
      ad::apply_gradients(net, vars, tape, opt);
    }
    double epoch_loss = loss_sum / steps_per_epoch;
    double acc = pair_classification_accuracy(m, ds, eval_ids, 512,
                                              hash_combine(cfg.seed, 0xacce + uint64_t(epoch)));
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_accuracy.push_back(acc);
    logger.log(epoch, epoch_loss, acc);
  }
  result.holdout_accuracy = pair_classification_accuracy(
      m, ds, eval_ids, 2048, hash_combine(cfg.seed, 0xf19ce));
  logger.flush(cfg.metrics_path);
  return result;
}

void LocalMetric::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const ad::Mlp<float>& net = variant == LocalMetricVariant::Siamese ? embedder.mlp : trunk;
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = "local_metric";
  meta["variant"] = variant == LocalMetricVariant::Siamese ? "siamese" : "trunk";
  meta["resolution"] = resolution;
  meta["input_dim"] = input_dim;
  meta["layer_dims"] = net.dims;
  meta["p"] = embedder.p;
  meta["threshold_d0"] = threshold_d0;
  write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
  auto flat = net.flatten();
  write_file_atomic(dir / "weights.f32", flat.data(), flat.size() * sizeof(float));
}

LocalMetric LocalMetric::load(const std::filesystem::path& dir) {
  json meta = json::parse(read_file_text(dir / "model.json"));
  if (meta.at("kind").get<std::string>() != "local_metric")
    throw std::runtime_error("not a local metric checkpoint: " + dir.string());
  LocalMetric m;
  m.variant = meta.at("variant").get<std::string>() == "siamese" ? LocalMetricVariant::Siamese
                                                                 : LocalMetricVariant::Trunk;
  m.resolution = meta.at("resolution").get<int>();
  m.input_dim = meta.at("input_dim").get<int>();
  m.threshold_d0 = meta.at("threshold_d0").get<float>();
  std::vector<int> dims = meta.at("layer_dims").get<std::vector<int>>();
  Rng dummy(0);
  ad::Mlp<float>& net = m.variant == LocalMetricVariant::Siamese ? m.embedder.mlp : m.trunk;
  net.init(dims, dummy);
  m.embedder.p = meta.at("p").get<double>();
  auto bytes = read_file_bytes(dir / "weights.f32");
  std::vector<float> flat(bytes.size() / sizeof(float));
  std::memcpy(flat.data(), bytes.data(), bytes.size());
  net.unflatten(flat);
  return m;
}

}  // namespace plan2vec
