#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "plan2vec/binio.hpp"
#include "plan2vec/maze_env.hpp"
#include "plan2vec/rng.hpp"

using namespace plan2vec;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("p2v_test_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("step moves freely in open space") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  AgentState s = step(open, {0, 0}, 0.0, 0.1);
  CHECK(s.x == doctest::Approx(0.1));
  CHECK(s.y == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("step clips at the arena boundary") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  AgentState s = step(open, {0.95f, 0}, 0.0, 0.1);
  CHECK(s.x >= 0.95f);
  CHECK(s.x <= 1.0f);
  CHECK(state_valid(open, s));
}

TEST_CASE("step stops on the start side of the c-maze wall") {
  MazeLayout maze = MazeLayout::make(LayoutKind::CMaze);
  const Rect wall = maze.obstacles.front();

  // segment-intersection oracle: a horizontal motion from x0 toward the wall
  // crosses its left face at t = (wall.x0 - x0) / dx
  Rng rng(17);
  for (int rep = 0; rep < 500; ++rep) {
    float y = float(rng.uniform(-0.95, 0.45));  // below the gap
    float x0 = float(rng.uniform(-0.5, double(wall.x0) - 0.011));
    double step_len = rng.uniform(0.02, 0.4);
    AgentState s = step(maze, {x0, y}, 0.0, step_len);
    double t_cross = (double(wall.x0) - x0) / step_len;
    if (t_cross <= 1.0) {
      CHECK(s.x < wall.x0);          // stays on the start side
      CHECK(s.x >= x0);              // never moves backward
    } else {
      CHECK(s.x == doctest::Approx(x0 + step_len).epsilon(1e-5));
    }
    CHECK(s.y == y);
    CHECK(state_valid(maze, s));
  }
}

TEST_CASE("random walks never leave the valid region") {
  Rng rng(23);
  for (LayoutKind kind : {LayoutKind::Open, LayoutKind::Table, LayoutKind::CMaze}) {
    MazeLayout layout = MazeLayout::make(kind);
    AgentState s{0.9f, 0.9f};
    REQUIRE(state_valid(layout, s));
    for (int i = 0; i < 2000; ++i) {
      s = step(layout, s, rng.uniform(0, 2 * M_PI), 0.1);
      REQUIRE(state_valid(layout, s));
    }
  }
}

TEST_CASE("render is deterministic and mirror-symmetric at the center") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  auto img = render(open, {0, 0}, 64);
  auto img2 = render(open, {0, 0}, 64);
  CHECK(img == img2);

  // horizontal mirror: pixel (r, c) == pixel (r, 63 - c)
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) REQUIRE(img(r * 64 + c) == img(r * 64 + (63 - c)));
}

TEST_CASE("render rejects tiny resolutions") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  CHECK_THROWS_AS(render(open, {0, 0}, 7), std::invalid_argument);
  CHECK_NOTHROW(render(open, {0, 0}, 8));
}

TEST_CASE("distinct positions render distinct images") {
  // exhaustive over a coarse grid, all pairs farther apart than the disk
  for (int res : {16, 64}) {
    MazeLayout open = MazeLayout::make(LayoutKind::Open);
    double diameter = 2.0 * agent_disk_radius_px(res) * 2.0 / res;
    std::vector<AgentState> grid;
    for (double x = -0.8; x <= 0.81; x += 0.4)
      for (double y = -0.8; y <= 0.81; y += 0.4) grid.push_back({float(x), float(y)});
    for (size_t i = 0; i < grid.size(); ++i)
      for (size_t j = i + 1; j < grid.size(); ++j) {
        double dx = grid[i].x - grid[j].x, dy = grid[i].y - grid[j].y;
        if (std::sqrt(dx * dx + dy * dy) <= diameter) continue;
        auto a = render(open, grid[i], res);
        auto b = render(open, grid[j], res);
        REQUIRE(a != b);
      }
  }
}

TEST_CASE("obstacles are visible at low resolution") {
  MazeLayout maze = MazeLayout::make(LayoutKind::CMaze);
  auto img = render(maze, {0.9f, 0.9f}, 16);
  int dark = 0;
  for (int i = 0; i < 16 * 16; ++i)
    if (img(i) == 0.0f) ++dark;
  CHECK(dark > 0);  // the thin wall must rasterize
}

TEST_CASE("free space is connected in every layout") {
  for (LayoutKind kind : {LayoutKind::Open, LayoutKind::Table, LayoutKind::CMaze}) {
    CHECK(free_space_component_count(MazeLayout::make(kind), 64) == 1);
  }
}

TEST_CASE("rollout generation counts and spans") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  SUBCASE("minimal dataset") {
    auto ds = generate_rollouts(open, 1, 2, 1, 5, 16);
    CHECK(ds.count() == 3);
    REQUIRE(ds.rollouts.size() == 1);
    CHECK(ds.rollouts[0] == std::make_pair(0, 3));
  }
  SUBCASE("paper-scale counting") {
    auto ds = generate_rollouts(open, 1000, 10, 20, 5, 16);
    CHECK(ds.count() == 11000);
    CHECK(ds.rollouts.size() == 1000);
    // spans are disjoint and cover everything
    std::set<int> covered;
    for (auto [start, len] : ds.rollouts)
      for (int i = start; i < start + len; ++i) REQUIRE(covered.insert(i).second);
    CHECK(int(covered.size()) == ds.count());
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(generate_rollouts(open, 0, 10, 1, 5, 16), std::invalid_argument);
    CHECK_THROWS_AS(generate_rollouts(open, 1, 1, 1, 5, 16), std::invalid_argument);
  }
}

TEST_CASE("consecutive positions move at most one step") {
  MazeLayout maze = MazeLayout::make(LayoutKind::CMaze);
  auto ds = generate_rollouts(maze, 50, 10, 4, 77, 16);
  for (auto [start, len] : ds.rollouts)
    for (int t = 0; t + 1 < len; ++t) {
      double dx = ds.positions(start + t + 1, 0) - ds.positions(start + t, 0);
      double dy = ds.positions(start + t + 1, 1) - ds.positions(start + t, 1);
      REQUIRE(std::sqrt(dx * dx + dy * dy) <= ds.step_size + 1e-6);
    }
}

TEST_CASE("generation is deterministic and worker-count invariant") {
  MazeLayout table = MazeLayout::make(LayoutKind::Table);
  auto a = generate_rollouts(table, 40, 8, 4, 123, 16, 0.1, 1);
  auto b = generate_rollouts(table, 40, 8, 4, 123, 16, 0.1, 1);
  auto c = generate_rollouts(table, 40, 8, 4, 123, 16, 0.1, 3);
  CHECK(a.observations == b.observations);
  CHECK(a.positions == b.positions);
  CHECK(a.observations == c.observations);
  CHECK(a.positions == c.positions);
}

TEST_CASE("all generated states are valid") {
  for (LayoutKind kind : {LayoutKind::Open, LayoutKind::Table, LayoutKind::CMaze}) {
    MazeLayout layout = MazeLayout::make(kind);
    auto ds = generate_rollouts(layout, 30, 10, 3, 9, 16);
    for (int i = 0; i < ds.count(); ++i)
      REQUIRE(state_valid(layout, {ds.positions(i, 0), ds.positions(i, 1)}));
  }
}

TEST_CASE("dataset save/load round trip is bit-exact") {
  auto dir = temp_dir("dataset");
  MazeLayout maze = MazeLayout::make(LayoutKind::CMaze);
  auto ds = generate_rollouts(maze, 12, 6, 2, 31, 16);
  ds.save(dir);
  auto loaded = TrajectoryDataset::load(dir);
  CHECK(loaded.observations == ds.observations);
  CHECK(loaded.positions == ds.positions);
  CHECK(loaded.rollouts == ds.rollouts);
  CHECK(loaded.layout_name == ds.layout_name);
  CHECK(loaded.resolution == ds.resolution);
  CHECK(loaded.step_size == ds.step_size);

  // a second save produces identical bytes
  auto dir2 = temp_dir("dataset2");
  loaded.save(dir2);
  CHECK(read_file_bytes(dir / "observations.f32") == read_file_bytes(dir2 / "observations.f32"));
  CHECK(read_file_bytes(dir / "manifest.json") == read_file_bytes(dir2 / "manifest.json"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("rollout_of maps flat indices to spans") {
  MazeLayout open = MazeLayout::make(LayoutKind::Open);
  auto ds = generate_rollouts(open, 5, 4, 1, 2, 16);
  CHECK(ds.rollout_of(0) == 0);
  CHECK(ds.rollout_of(4) == 0);
  CHECK(ds.rollout_of(5) == 1);
  CHECK_THROWS_AS(ds.rollout_of(9999), std::out_of_range);
}
