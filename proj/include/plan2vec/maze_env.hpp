#ifndef PLAN2VEC_MAZE_ENV_HPP
#define PLAN2VEC_MAZE_ENV_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace plan2vec {

using RowMatf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LayoutKind { Open, Table, CMaze };

struct Rect {
  float x0, y0, x1, y1;
  bool interior_contains(float x, float y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
};

// Square arena [-1, 1]^2 with axis-aligned obstacles. Free space is connected
// for all three layouts (checked by free_space_component_count).
struct MazeLayout {
  LayoutKind kind;
  std::string name;
  std::vector<Rect> obstacles;

  static MazeLayout make(LayoutKind kind);
  static MazeLayout from_name(const std::string& name);
};

struct AgentState {
  float x = 0, y = 0;
};

constexpr double kArenaMin = -1.0;
constexpr double kArenaMax = 1.0;
constexpr double kDefaultStepSize = 0.1;
constexpr int kDefaultResolution = 64;

bool state_valid(const MazeLayout& layout, AgentState s);

// Moves step_size along direction, truncating at the first obstacle or arena
// boundary contact (stop at contact minus a small epsilon; no sliding).
AgentState step(const MazeLayout& layout, AgentState s, double direction_rad,
                double step_size);

// Deterministic top-down rasterization: free space 1.0, obstacles 0.0, agent
// a filled disk of intensity 0.5 (radius 3 px at 64x64, scaled with
// resolution). resolution < 8 is rejected.
Eigen::RowVectorXf render(const MazeLayout& layout, AgentState s, int resolution);
int agent_disk_radius_px(int resolution);

// Number of connected components of the discretized free space (cell centers,
// 4-neighbor adjacency).
int free_space_component_count(const MazeLayout& layout, int grid = 64);

struct TrajectoryDataset {
  std::string layout_name;
  int resolution = kDefaultResolution;
  int horizon = 0;
  int n_policies = 0;
  uint64_t seed = 0;
  double step_size = kDefaultStepSize;

  RowMatf observations;                        // [N, resolution^2], row-major
  std::vector<std::pair<int, int>> rollouts;   // (start_index, length)
  RowMatf positions;                           // [N, 2]; ground truth, evaluation only

  int count() const { return int(observations.rows()); }
  int obs_dim() const { return int(observations.cols()); }

  // Rollout index owning a flat observation index.
  int rollout_of(int obs_index) const;

  void save(const std::filesystem::path& dir) const;
  static TrajectoryDataset load(const std::filesystem::path& dir);
};

// Uniform-random-direction policy rollouts with fixed step size; start states
// sampled uniformly from free space. Deterministic for a given seed at any
// worker count.
TrajectoryDataset generate_rollouts(const MazeLayout& layout, int n_rollouts, int horizon,
                                    int n_policies, uint64_t seed,
                                    int resolution = kDefaultResolution,
                                    double step_size = kDefaultStepSize, int workers = 1);

}  // namespace plan2vec

#endif
