#ifndef PLAN2VEC_PIPELINE_HPP
#define PLAN2VEC_PIPELINE_HPP

#include <stdexcept>
#include <string>

#include "plan2vec/config.hpp"

namespace plan2vec {

// Missing or mismatched input artifacts; the CLI maps this to exit code 2.
struct StageError : std::runtime_error {
  explicit StageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Artifact locations inside a run directory.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path run_log() const { return root / "run.jsonl"; }
  std::filesystem::path dataset_dir() const { return root / "dataset"; }
  std::filesystem::path dataset_manifest() const { return dataset_dir() / "manifest.json"; }
  std::filesystem::path local_dir() const { return root / "local_metric"; }
  std::filesystem::path local_model() const { return local_dir() / "model.json"; }
  std::filesystem::path local_metrics() const {
    return local_dir() / "local_metric_metrics.jsonl";
  }
  std::filesystem::path graph_dir() const { return root / "graph"; }
  std::filesystem::path graph_meta() const { return graph_dir() / "graph.json"; }
  std::filesystem::path global_dir() const { return root / "global_metric"; }
  std::filesystem::path global_model() const { return global_dir() / "model.json"; }
  std::filesystem::path global_metrics() const {
    return global_dir() / "plan2vec_metrics.jsonl";
  }
  std::filesystem::path eval_report() const { return root / "eval" / "eval_report.json"; }
  std::filesystem::path lookahead_curve() const {
    return root / "eval" / "lookahead_curve.csv";
  }
  std::filesystem::path planning_cost() const {
    return root / "plan_cost" / "planning_cost.csv";
  }
  std::filesystem::path embedding_csv() const { return root / "embedding.csv"; }
  std::filesystem::path diagnostics_dir() const { return root / "diagnostics"; }
  std::filesystem::path plots_dir() const { return root / "plots"; }
};

void run_gen_data(const RunConfig& cfg);
void run_train_local(const RunConfig& cfg);
void run_build_graph(const RunConfig& cfg);
void run_train_plan2vec(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);
void run_plan_cost(const RunConfig& cfg);
void run_export_embedding(const RunConfig& cfg);
void run_plot(const RunConfig& cfg);
void run_pipeline(const RunConfig& cfg);

}  // namespace plan2vec

#endif
