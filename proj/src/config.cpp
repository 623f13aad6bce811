#include "plan2vec/config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"

#include "plan2vec/binio.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = 1;
  j["layout"] = c.layout;
  j["resolution"] = c.resolution;
  j["n_rollouts"] = c.n_rollouts;
  j["horizon"] = c.horizon;
  j["n_policies"] = c.n_policies;
  j["step_size"] = c.step_size;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["local_variant"] = c.local_variant;
  j["local_objective"] = c.local_objective;
  j["local_epochs"] = c.local_epochs;
  j["local_lr"] = c.local_lr;
  j["local_ratio"] = c.local_ratio;
  j["local_batch"] = c.local_batch;
  j["local_hidden"] = c.local_hidden;
  j["local_embed_dim"] = c.local_embed_dim;
  j["local_hinge_far"] = c.local_hinge_far;
  j["local_k_negatives"] = c.local_k_negatives;
  j["holdout_fold"] = c.holdout_fold;
  j["d0"] = c.d0;
  j["graph_block"] = c.graph_block;
  j["trainer_mode"] = c.trainer_mode;
  j["trainer_rounds"] = c.trainer_rounds;
  j["batch_rollouts"] = c.batch_rollouts;
  j["steps_per_rollout"] = c.steps_per_rollout;
  j["opt_epochs"] = c.opt_epochs;
  j["minibatch"] = c.minibatch;
  j["trainer_lr"] = c.trainer_lr;
  j["target_scale"] = c.target_scale;
  j["lookahead_k"] = c.lookahead_k;
  j["step_limit"] = c.step_limit;
  j["target_sync_interval"] = c.target_sync_interval;
  j["latent_dim"] = c.latent_dim;
  j["metric_p"] = c.metric_p;
  j["global_hidden"] = c.global_hidden;
  j["eval_n_tasks"] = c.eval_n_tasks;
  j["eval_k"] = c.eval_k;
  j["eval_k_values"] = c.eval_k_values;
  j["eval_success_radius"] = c.eval_success_radius;
  j["eval_step_budget"] = c.eval_step_budget;
  j["eval_max_goal_hops"] = c.eval_max_goal_hops;
  j["eval_methods"] = c.eval_methods;
  j["plancost_lengths"] = c.plancost_lengths;
  j["plancost_queries_per_length"] = c.plancost_queries_per_length;
  j["out_dir"] = c.out_dir;
  return j;
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string RunConfig::to_json_text() const { return to_json(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  const json canonical = to_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!canonical.contains(key))
      throw std::invalid_argument("unknown config key: " + key);
  }
  read_field(j, "layout", c.layout);
  read_field(j, "resolution", c.resolution);
  read_field(j, "n_rollouts", c.n_rollouts);
  read_field(j, "horizon", c.horizon);
  read_field(j, "n_policies", c.n_policies);
  read_field(j, "step_size", c.step_size);
  read_field(j, "seed", c.seed);
  read_field(j, "workers", c.workers);
  read_field(j, "local_variant", c.local_variant);
  read_field(j, "local_objective", c.local_objective);
  read_field(j, "local_epochs", c.local_epochs);
  read_field(j, "local_lr", c.local_lr);
  read_field(j, "local_ratio", c.local_ratio);
  read_field(j, "local_batch", c.local_batch);
  read_field(j, "local_hidden", c.local_hidden);
  read_field(j, "local_embed_dim", c.local_embed_dim);
  read_field(j, "local_hinge_far", c.local_hinge_far);
  read_field(j, "local_k_negatives", c.local_k_negatives);
  read_field(j, "holdout_fold", c.holdout_fold);
  read_field(j, "d0", c.d0);
  read_field(j, "graph_block", c.graph_block);
  read_field(j, "trainer_mode", c.trainer_mode);
  read_field(j, "trainer_rounds", c.trainer_rounds);
  read_field(j, "batch_rollouts", c.batch_rollouts);
  read_field(j, "steps_per_rollout", c.steps_per_rollout);
  read_field(j, "opt_epochs", c.opt_epochs);
  read_field(j, "minibatch", c.minibatch);
  read_field(j, "trainer_lr", c.trainer_lr);
  read_field(j, "target_scale", c.target_scale);
  read_field(j, "lookahead_k", c.lookahead_k);
  read_field(j, "step_limit", c.step_limit);
  read_field(j, "target_sync_interval", c.target_sync_interval);
  read_field(j, "latent_dim", c.latent_dim);
  read_field(j, "metric_p", c.metric_p);
  read_field(j, "global_hidden", c.global_hidden);
  read_field(j, "eval_n_tasks", c.eval_n_tasks);
  read_field(j, "eval_k", c.eval_k);
  read_field(j, "eval_k_values", c.eval_k_values);
  read_field(j, "eval_success_radius", c.eval_success_radius);
  read_field(j, "eval_step_budget", c.eval_step_budget);
  read_field(j, "eval_max_goal_hops", c.eval_max_goal_hops);
  read_field(j, "eval_methods", c.eval_methods);
  read_field(j, "plancost_lengths", c.plancost_lengths);
  read_field(j, "plancost_queries_per_length", c.plancost_queries_per_length);
  read_field(j, "out_dir", c.out_dir);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json_text(read_file_text(path));
}

void RunConfig::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json_text());
}

std::string RunConfig::hash() const {
  std::string text = to_json_text();
  return hash_hex(text.data(), text.size());
}

void RunConfig::validate() const {
  const std::set<std::string> layouts{"open", "table", "c-maze"};
  if (!layouts.count(layout))
    throw std::invalid_argument("config: layout must be open, table, or c-maze");
  if (resolution < 8) throw std::invalid_argument("config: resolution >= 8");
  if (n_rollouts < 1) throw std::invalid_argument("config: n_rollouts >= 1");
  if (horizon < 2) throw std::invalid_argument("config: horizon >= 2");
  if (local_variant != "siamese" && local_variant != "trunk")
    throw std::invalid_argument("config: local_variant must be siamese or trunk");
  if (local_objective != "regression" && local_objective != "nce")
    throw std::invalid_argument("config: local_objective must be regression or nce");
  if (trainer_mode != "amortized" && trainer_mode != "fvi")
    throw std::invalid_argument("config: trainer_mode must be amortized or fvi");
  if (d0 <= 0) throw std::invalid_argument("config: d0 > 0");
  if (metric_p < 1.0 || metric_p > 2.0)
    throw std::invalid_argument("config: metric_p in [1, 2]");
  if (lookahead_k < 1) throw std::invalid_argument("config: lookahead_k >= 1");
  if (eval_n_tasks < 1) throw std::invalid_argument("config: eval_n_tasks >= 1");
  for (const auto& m : eval_methods) (void)m;  // validated at use
}

}  // namespace plan2vec
