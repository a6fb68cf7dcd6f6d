#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "gbpplan/robot.hpp"
#include "gbpplan/scenario.hpp"

using gbpplan::build_scenario;
using gbpplan::JunctionSpawner;
using gbpplan::resolve_config;
using gbpplan::RobotSpec;
using gbpplan::ScenarioConfig;
using gbpplan::ScenarioKind;

namespace {

ScenarioConfig circle_config(int n, std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Circle;
  cfg.n_robots = n;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("two circle robots start antipodal and swap places") {
  auto s = build_scenario(circle_config(2));
  REQUIRE(s.initial_robots.size() == 2);
  const auto& a = s.initial_robots[0];
  const auto& b = s.initial_robots[1];
  CHECK((a.start.pos - Eigen::Vector2d(50.0, 0.0)).norm() < 1e-12);
  CHECK((b.start.pos + a.start.pos).norm() < 1e-12);
  CHECK((a.goal.pos + a.start.pos).norm() < 1e-12);
  CHECK((b.goal.pos - a.start.pos).norm() < 1e-12);
  // Initial velocity aims at the antipode at the configured speed.
  CHECK((a.start.vel - Eigen::Vector2d(-15.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("ten circle robots are evenly spaced on the ring") {
  auto s = build_scenario(circle_config(10));
  REQUIRE(s.initial_robots.size() == 10);
  for (int i = 0; i < 10; ++i) {
    const auto& r = s.initial_robots[i];
    CHECK(r.id == i);
    CHECK(r.start.pos.norm() == doctest::Approx(50.0).epsilon(1e-12));
    CHECK((r.goal.pos + r.start.pos).norm() < 1e-9);
    CHECK(r.radius >= 2.0);
    CHECK(r.radius < 3.0);
    CHECK(r.max_speed == doctest::Approx(15.0));
    CHECK_FALSE(r.moving_horizon);
    const double want = 2.0 * M_PI * i / 10.0;
    CHECK(std::atan2(r.start.pos.y(), r.start.pos.x()) ==
          doctest::Approx(want > M_PI ? want - 2.0 * M_PI : want).epsilon(1e-9));
  }
  CHECK(s.obstacles.empty());
}

TEST_CASE("radii are deterministic per seed and vary across seeds") {
  auto a = build_scenario(circle_config(10, 7));
  auto b = build_scenario(circle_config(10, 7));
  auto c = build_scenario(circle_config(10, 8));
  bool any_differ = false;
  for (int i = 0; i < 10; ++i) {
    CHECK(a.initial_robots[i].radius == b.initial_robots[i].radius);
    any_differ = any_differ || a.initial_robots[i].radius != c.initial_robots[i].radius;
  }
  CHECK(any_differ);
}

TEST_CASE("internal-only plans are congruent under the ring rotation") {
  // With no obstacles and no inter-robot exchange every fragment solves the
  // same chain rotated by the spawn angle, so the plans must match under
  // that rotation.
  auto s = build_scenario(circle_config(5));
  std::map<int, std::unique_ptr<gbpplan::RobotFragment>> frags;
  for (const auto& spec : s.initial_robots) {
    auto schedule = gbpplan::TrajectorySchedule::geometric(s.cfg.num_states, s.cfg.timestep,
                                                           s.cfg.horizon);
    frags[spec.id] = std::make_unique<gbpplan::RobotFragment>(
        spec.id, spec.start, spec.goal, spec.radius, spec.max_speed, schedule, s.cfg.factors,
        s.sdf, spec.moving_horizon, s.cfg.damping);
    frags[spec.id]->internal_iterations(50);
  }
  for (int i = 1; i < 5; ++i) {
    const double th = 2.0 * M_PI * i / 5.0;
    Eigen::Matrix2d rot;
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    for (int k = 0; k < s.cfg.num_states; ++k) {
      const Eigen::Vector4d base = *frags[0]->state_mean(k);
      const Eigen::Vector4d other = *frags[i]->state_mean(k);
      CHECK((rot * base.head<2>() - other.head<2>()).norm() < 1e-6);
      CHECK((rot * base.tail<2>() - other.tail<2>()).norm() < 1e-6);
    }
  }
}

TEST_CASE("derived defaults fill the horizon and world extent") {
  auto cfg = resolve_config(circle_config(10));
  CHECK(cfg.horizon == doctest::Approx(2.0 * 100.0 / 15.0).epsilon(1e-12));
  CHECK(cfg.world_half_extent == doctest::Approx(60.0));
  CHECK(cfg.comm.seed == cfg.seed);
  CHECK(cfg.factors.comm_radius == doctest::Approx(cfg.comm.r_c));

  ScenarioConfig j;
  j.kind = ScenarioKind::Junction;
  auto rj = resolve_config(j);
  CHECK(rj.horizon == doctest::Approx(2.0));
  CHECK(rj.world_half_extent == doctest::Approx(46.0));

  // An explicit horizon survives resolution.
  ScenarioConfig c = circle_config(10);
  c.horizon = 20.0;
  CHECK(resolve_config(c).horizon == doctest::Approx(20.0));
}

TEST_CASE("configuration validation rejects bad inputs") {
  CHECK_THROWS(build_scenario(circle_config(0)));

  ScenarioConfig cfg = circle_config(10);
  cfg.damping = 1.0;
  CHECK_THROWS(resolve_config(cfg));

  cfg = circle_config(10);
  cfg.horizon = 0.5;  // shorter than (num_states - 1) * timestep
  CHECK_THROWS(resolve_config(cfg));

  cfg = circle_config(10);
  cfg.kind = ScenarioKind::Custom;
  cfg.horizon = 10.0;
  CHECK_THROWS(resolve_config(cfg));  // no robots

  cfg.custom_robots.resize(2);
  cfg.custom_robots[0].id = 3;
  cfg.custom_robots[1].id = 3;
  CHECK_THROWS(resolve_config(cfg));  // duplicate id

  cfg.custom_robots[1].id = 4;
  cfg.custom_obstacles.push_back({{0.0, 0.0}, {1.0, 0.0}});
  CHECK_THROWS(resolve_config(cfg));  // degenerate polygon

  cfg = circle_config(10);
  cfg.kind = ScenarioKind::Junction;
  cfg.junction.arm_length = 7.0;  // inside the half width
  CHECK_THROWS(resolve_config(cfg));

  // Custom without an explicit horizon cannot derive one.
  ScenarioConfig c2;
  c2.kind = ScenarioKind::Custom;
  c2.custom_robots.resize(1);
  CHECK_THROWS(resolve_config(c2));
}

TEST_CASE("obstacle course fuses five pentagons into a central island") {
  ScenarioConfig cfg = circle_config(10);
  cfg.kind = ScenarioKind::CircleWithObstacles;
  auto s = build_scenario(cfg);
  REQUIRE(s.obstacles.size() == 5);
  for (const auto& poly : s.obstacles) {
    REQUIRE(poly.size() == 5);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& v : poly) centroid += v / 5.0;
    CHECK(centroid.norm() == doctest::Approx(1.5).epsilon(1e-9));
    // Each pentagon spikes through the workspace center to 4.5 m beyond it,
    // so the union is sealed solid around the origin.
    double closest = 1e9;
    for (const auto& v : poly) closest = std::min(closest, v.norm());
    CHECK(closest == doctest::Approx(4.5).epsilon(1e-6));
  }
  // The SDF sees a solid island: center and near-offsets are inside, the
  // crossing lanes a dozen meters out are free.
  CHECK(s.sdf->sample({0.0, 0.0}).distance < 0.0);
  CHECK(s.sdf->sample({3.0, 2.0}).distance < 0.0);
  CHECK(s.sdf->sample({12.0, 0.0}).distance > 0.0);
  CHECK(s.sdf->sample({0.0, -12.0}).distance > 0.0);
}

TEST_CASE("junction walls carve an orthogonal cross") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Junction;
  auto s = build_scenario(cfg);
  REQUIRE(s.obstacles.size() == 4);
  REQUIRE(s.spawner != nullptr);
  CHECK(s.despawn_bounds.contains({44.0, 0.0}));
  CHECK_FALSE(s.despawn_bounds.contains({44.1, 0.0}));
  // Channels stay free, wall interiors do not.
  CHECK(s.sdf->sample({0.0, 0.0}).distance > 0.0);
  CHECK(s.sdf->sample({30.0, 0.0}).distance > 0.0);
  CHECK(s.sdf->sample({0.0, -30.0}).distance > 0.0);
  CHECK(s.sdf->sample({12.0, 12.0}).distance < 0.0);
  CHECK(s.sdf->sample({-12.0, 12.0}).distance < 0.0);
}

TEST_CASE("silent junction never spawns") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Junction;
  cfg.junction.q_in = 0.0;
  auto resolved = resolve_config(cfg);
  JunctionSpawner spawner(resolved);
  CHECK(spawner.scheduled_total() == 0);
  for (int t = 1; t <= 100; ++t) CHECK(spawner.take_due(t).empty());
}

TEST_CASE("spawner delivers the configured arrival rate") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Junction;
  cfg.junction.q_in = 2.0;
  cfg.max_ticks = 500;  // 50 seconds at 0.1
  auto resolved = resolve_config(cfg);
  JunctionSpawner spawner(resolved);
  CHECK(spawner.scheduled_total() == 100);  // q_in * duration

  std::set<int> seen;
  int last_id_prev_ticks = -1;
  for (int t = 1; t <= 500; ++t) {
    auto due = spawner.take_due(t);
    int prev = -1;
    for (const auto& r : due) {
      CHECK(r.id > prev);  // ascending within a tick
      prev = r.id;
      CHECK(seen.insert(r.id).second);  // each id exactly once
      CHECK(r.moving_horizon);
      if (r.expected_exit == gbpplan::kSideEast) {
        CHECK(r.start.pos.x() == doctest::Approx(-40.0));
        CHECK((r.start.pos.y() == doctest::Approx(-2.0) ||
               r.start.pos.y() == doctest::Approx(-5.0)));
        CHECK(r.start.vel.x() == doctest::Approx(15.0));
      } else {
        CHECK(r.expected_exit == gbpplan::kSideNorth);
        CHECK(r.start.pos.y() == doctest::Approx(-40.0));
        CHECK((r.start.pos.x() == doctest::Approx(2.0) ||
               r.start.pos.x() == doctest::Approx(5.0)));
        CHECK(r.start.vel.y() == doctest::Approx(15.0));
      }
    }
    (void)last_id_prev_ticks;
  }
  CHECK(static_cast<int>(seen.size()) == 100);
  CHECK(spawner.deferrals() == 0);
}

TEST_CASE("spawn schedules repeat per seed and move with it") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Junction;
  cfg.max_ticks = 300;
  auto r1 = resolve_config(cfg);
  cfg.seed = 2;
  auto r2 = resolve_config(cfg);

  JunctionSpawner a(r1), b(r1), c(r2);
  CHECK(a.scheduled_total() == b.scheduled_total());
  bool any_differ = false;
  for (int t = 1; t <= 300; ++t) {
    auto da = a.take_due(t);
    auto db = b.take_due(t);
    auto dc = c.take_due(t);
    REQUIRE(da.size() == db.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
      CHECK(da[i].id == db[i].id);
      CHECK((da[i].start.pos - db[i].start.pos).norm() == 0.0);
    }
    if (da.size() != dc.size()) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("a deferred spawn comes back on the next tick") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Junction;
  cfg.max_ticks = 300;
  auto resolved = resolve_config(cfg);
  JunctionSpawner spawner(resolved);

  int first_tick = 0;
  RobotSpec held;
  for (int t = 1; t <= 300 && first_tick == 0; ++t) {
    auto due = spawner.take_due(t);
    if (!due.empty()) {
      first_tick = t;
      held = due[0];
      spawner.defer(held);
      for (std::size_t i = 1; i < due.size(); ++i) spawner.defer(due[i]);
    }
  }
  REQUIRE(first_tick > 0);
  auto next = spawner.take_due(first_tick + 1);
  REQUIRE_FALSE(next.empty());
  CHECK(next[0].id == held.id);
  CHECK(spawner.deferrals() >= 1);
}
