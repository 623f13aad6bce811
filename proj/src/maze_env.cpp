#include "plan2vec/maze_env.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "plan2vec/binio.hpp"
#include "plan2vec/concurrency.hpp"
#include "plan2vec/rng.hpp"

namespace plan2vec {

using json = nlohmann::ordered_json;

namespace {

constexpr double kContactEps = 1e-3;  // arena units backed off from any contact
constexpr float kCMazeWallHalfWidth = 0.03f;
constexpr float kCMazeWallTop = 0.5f;
constexpr float kTableHalfSide = 0.4f;

// Earliest t in [0, 1] at which p + t*d enters rect; +inf when it does not.
double aabb_entry_param(double px, double py, double dx, double dy, const Rect& r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double tmin = -inf, tmax = inf;
  const double lo[2] = {r.x0, r.y0}, hi[2] = {r.x1, r.y1};
  const double p[2] = {px, py}, d[2] = {dx, dy};
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (p[axis] <= lo[axis] || p[axis] >= hi[axis]) return inf;
    } else {
      double t1 = (lo[axis] - p[axis]) / d[axis];
      double t2 = (hi[axis] - p[axis]) / d[axis];
      tmin = std::max(tmin, std::min(t1, t2));
      tmax = std::min(tmax, std::max(t1, t2));
    }
  }
  if (tmin > tmax || tmax < 0.0 || tmin > 1.0) return inf;
  return std::max(tmin, 0.0);
}

}  // namespace

MazeLayout MazeLayout::make(LayoutKind kind) {
  MazeLayout layout;
  layout.kind = kind;
  switch (kind) {
    case LayoutKind::Open:
      layout.name = "open";
      break;
    case LayoutKind::Table:
      layout.name = "table";
      layout.obstacles.push_back(
          Rect{-kTableHalfSide, -kTableHalfSide, kTableHalfSide, kTableHalfSide});
      break;
    case LayoutKind::CMaze:
      // Vertical wall at x = 0 from the bottom up to y = 0.5, leaving a gap at
      // the top; splits the arena into two corridors.
      layout.name = "c-maze";
      layout.obstacles.push_back(
          Rect{-kCMazeWallHalfWidth, -1.0f, kCMazeWallHalfWidth, kCMazeWallTop});
      break;
  }
  return layout;
}

MazeLayout MazeLayout::from_name(const std::string& name) {
  if (name == "open") return make(LayoutKind::Open);
  if (name == "table") return make(LayoutKind::Table);
  if (name == "c-maze" || name == "cmaze") return make(LayoutKind::CMaze);
  throw std::invalid_argument("unknown layout: " + name +
                              " (expected open, table, or c-maze)");
}

bool state_valid(const MazeLayout& layout, AgentState s) {
  if (s.x < kArenaMin || s.x > kArenaMax || s.y < kArenaMin || s.y > kArenaMax)
    return false;
  for (const Rect& r : layout.obstacles)
    if (r.interior_contains(s.x, s.y)) return false;
  return true;
}

AgentState step(const MazeLayout& layout, AgentState s, double direction_rad,
                double step_size) {
  if (step_size <= 0) throw std::invalid_argument("step: step_size must be > 0");
  double dx = std::cos(direction_rad) * step_size;
  double dy = std::sin(direction_rad) * step_size;
  double t = 1.0;
  bool contact = false;

  // arena boundary exits
  if (dx > 0) {
    double tb = (kArenaMax - s.x) / dx;
    if (tb < t) { t = tb; contact = true; }
  } else if (dx < 0) {
    double tb = (kArenaMin - s.x) / dx;
    if (tb < t) { t = tb; contact = true; }
  }
  if (dy > 0) {
    double tb = (kArenaMax - s.y) / dy;
    if (tb < t) { t = tb; contact = true; }
  } else if (dy < 0) {
    double tb = (kArenaMin - s.y) / dy;
    if (tb < t) { t = tb; contact = true; }
  }

  for (const Rect& r : layout.obstacles) {
    double te = aabb_entry_param(s.x, s.y, dx, dy, r);
    if (te < t) { t = te; contact = true; }
  }

  if (contact) t = std::max(0.0, t - kContactEps / step_size);
  return AgentState{float(s.x + dx * t), float(s.y + dy * t)};
}

int agent_disk_radius_px(int resolution) {
  return std::max(1, int(std::lround(3.0 * resolution / 64.0)));
}

Eigen::RowVectorXf render(const MazeLayout& layout, AgentState s, int resolution) {
  if (resolution < 8)
    throw std::invalid_argument("render: resolution must be >= 8, got " +
                                std::to_string(resolution));
  const int n = resolution;
  const double w = 2.0 / n;
  Eigen::RowVectorXf img = Eigen::RowVectorXf::Ones(n * n);

  // Obstacles darken every pixel whose cell overlaps them (not just cell
  // centers), so thin walls stay visible at low resolutions.
  for (const Rect& r : layout.obstacles) {
    for (int row = 0; row < n; ++row) {
      double cy0 = 1.0 - (row + 1) * w, cy1 = 1.0 - row * w;
      if (cy1 <= r.y0 || cy0 >= r.y1) continue;
      for (int col = 0; col < n; ++col) {
        double cx0 = -1.0 + col * w, cx1 = cx0 + w;
        if (cx1 <= r.x0 || cx0 >= r.x1) continue;
        img(row * n + col) = 0.0f;
      }
    }
  }

  // agent disk, pixel-center test in pixel coordinates
  const double px = (s.x + 1.0) / 2.0 * n;
  const double py = (1.0 - s.y) / 2.0 * n;
  const int rad = agent_disk_radius_px(n);
  int row_lo = std::max(0, int(std::floor(py - rad - 1)));
  int row_hi = std::min(n - 1, int(std::ceil(py + rad + 1)));
  int col_lo = std::max(0, int(std::floor(px - rad - 1)));
  int col_hi = std::min(n - 1, int(std::ceil(px + rad + 1)));
  for (int row = row_lo; row <= row_hi; ++row) {
    for (int col = col_lo; col <= col_hi; ++col) {
      double ddx = col + 0.5 - px, ddy = row + 0.5 - py;
      if (ddx * ddx + ddy * ddy <= double(rad) * rad) img(row * n + col) = 0.5f;
    }
  }
  return img;
}

int free_space_component_count(const MazeLayout& layout, int grid) {
  const double w = 2.0 / grid;
  std::vector<uint8_t> free(size_t(grid) * grid, 0);
  for (int row = 0; row < grid; ++row)
    for (int col = 0; col < grid; ++col) {
      float cx = float(-1.0 + (col + 0.5) * w);
      float cy = float(1.0 - (row + 0.5) * w);
      free[size_t(row) * grid + col] = state_valid(layout, {cx, cy}) ? 1 : 0;
    }
  std::vector<uint8_t> seen(free.size(), 0);
  int components = 0;
  std::vector<int> stack;
  for (size_t start = 0; start < free.size(); ++start) {
    if (!free[start] || seen[start]) continue;
    ++components;
    stack.push_back(int(start));
    seen[start] = 1;
    while (!stack.empty()) {
      int at = stack.back();
      stack.pop_back();
      int row = at / grid, col = at % grid;
      const int dr[4] = {1, -1, 0, 0}, dc[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        int nr = row + dr[k], nc = col + dc[k];
        if (nr < 0 || nr >= grid || nc < 0 || nc >= grid) continue;
        size_t to = size_t(nr) * grid + nc;
        if (free[to] && !seen[to]) {
          seen[to] = 1;
          stack.push_back(int(to));
        }
      }
    }
  }
  return components;
}

int TrajectoryDataset::rollout_of(int obs_index) const {
  for (size_t r = 0; r < rollouts.size(); ++r) {
    auto [start, len] = rollouts[r];
    if (obs_index >= start && obs_index < start + len) return int(r);
  }
  throw std::out_of_range("observation index outside all rollout spans");
}

TrajectoryDataset generate_rollouts(const MazeLayout& layout, int n_rollouts, int horizon,
                                    int n_policies, uint64_t seed, int resolution,
                                    double step_size, int workers) {
  if (n_rollouts < 1) throw std::invalid_argument("generate_rollouts: n_rollouts >= 1");
  if (horizon < 2) throw std::invalid_argument("generate_rollouts: horizon >= 2");
  if (n_policies < 1) throw std::invalid_argument("generate_rollouts: n_policies >= 1");

  const int steps_per = horizon + 1;
  const int total = n_rollouts * steps_per;
  TrajectoryDataset ds;
  ds.layout_name = layout.name;
  ds.resolution = resolution;
  ds.horizon = horizon;
  ds.n_policies = n_policies;
  ds.seed = seed;
  ds.step_size = step_size;
  ds.observations.resize(total, resolution * resolution);
  ds.positions.resize(total, 2);
  ds.rollouts.reserve(size_t(n_rollouts));
  for (int r = 0; r < n_rollouts; ++r) ds.rollouts.emplace_back(r * steps_per, steps_per);

  const int per_policy = (n_rollouts + n_policies - 1) / n_policies;
  parallel_for(n_rollouts, workers, [&](int r) {
    int policy = r / per_policy;
    Rng rng(hash_combine(hash_combine(seed, uint64_t(policy)), uint64_t(r)));
    AgentState s;
    do {
      s.x = float(rng.uniform(kArenaMin, kArenaMax));
      s.y = float(rng.uniform(kArenaMin, kArenaMax));
    } while (!state_valid(layout, s));
    int base = r * steps_per;
    for (int t = 0; t < steps_per; ++t) {
      if (t > 0) {
        double dir = rng.uniform(0.0, 2.0 * M_PI);
        s = step(layout, s, dir, step_size);
      }
      ds.observations.row(base + t) = render(layout, s, resolution);
      ds.positions(base + t, 0) = s.x;
      ds.positions(base + t, 1) = s.y;
    }
  });
  return ds;
}

void TrajectoryDataset::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "trajectory_dataset";
  manifest["layout"] = layout_name;
  manifest["resolution"] = resolution;
  manifest["n_rollouts"] = rollouts.size();
  manifest["horizon"] = horizon;
  manifest["n_policies"] = n_policies;
  manifest["seed"] = seed;
  manifest["step_size"] = step_size;
  manifest["n_observations"] = count();
  manifest["positions_evaluation_only"] = true;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  write_file_atomic(dir / "observations.f32", observations.data(),
                    size_t(observations.size()) * sizeof(float));
  write_file_atomic(dir / "positions.f32", positions.data(),
                    size_t(positions.size()) * sizeof(float));

  json spans = json::array();
  for (auto [start, len] : rollouts) spans.push_back(json::array({start, len}));
  json rolls;
  rolls["spans"] = spans;
  write_file_atomic(dir / "rollouts.json", rolls.dump() + "\n");
}

TrajectoryDataset TrajectoryDataset::load(const std::filesystem::path& dir) {
  json manifest = json::parse(read_file_text(dir / "manifest.json"));
  if (manifest.at("schema_version").get<int>() != 1)
    throw std::runtime_error("unsupported dataset schema version in " +
                             (dir / "manifest.json").string());
  TrajectoryDataset ds;
  ds.layout_name = manifest.at("layout").get<std::string>();
  ds.resolution = manifest.at("resolution").get<int>();
  ds.horizon = manifest.at("horizon").get<int>();
  ds.n_policies = manifest.at("n_policies").get<int>();
  ds.seed = manifest.at("seed").get<uint64_t>();
  ds.step_size = manifest.at("step_size").get<double>();
  const int n = manifest.at("n_observations").get<int>();
  const int dim = ds.resolution * ds.resolution;

  auto obs_bytes = read_file_bytes(dir / "observations.f32");
  if (obs_bytes.size() != size_t(n) * dim * sizeof(float))
    throw std::runtime_error("observations.f32 size mismatch in " + dir.string());
  ds.observations.resize(n, dim);
  std::memcpy(ds.observations.data(), obs_bytes.data(), obs_bytes.size());

  auto pos_bytes = read_file_bytes(dir / "positions.f32");
  if (pos_bytes.size() != size_t(n) * 2 * sizeof(float))
    throw std::runtime_error("positions.f32 size mismatch in " + dir.string());
  ds.positions.resize(n, 2);
  std::memcpy(ds.positions.data(), pos_bytes.data(), pos_bytes.size());

  json rolls = json::parse(read_file_text(dir / "rollouts.json"));
  for (const auto& span : rolls.at("spans"))
    ds.rollouts.emplace_back(span.at(0).get<int>(), span.at(1).get<int>());

  int covered = 0;
  for (auto [start, len] : ds.rollouts) covered += len;
  if (covered != n) throw std::runtime_error("rollout spans do not cover dataset");
  return ds;
}

}  // namespace plan2vec
