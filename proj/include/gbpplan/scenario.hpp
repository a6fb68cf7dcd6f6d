#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gbpplan/comms.hpp"
#include "gbpplan/factors.hpp"
#include "gbpplan/robot.hpp"
#include "gbpplan/sdf.hpp"

namespace gbpplan {

enum class ScenarioKind { Circle, CircleWithObstacles, Junction, Custom };

std::string scenario_kind_name(ScenarioKind kind);
ScenarioKind scenario_kind_from_name(const std::string& name);

/// Axis-aligned box, closed on both bounds.
struct Box {
  Eigen::Vector2d lo{0.0, 0.0};
  Eigen::Vector2d hi{0.0, 0.0};

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

// World-boundary sides, used to judge junction exits.
inline constexpr int kSideNone = -1;
inline constexpr int kSideEast = 0;
inline constexpr int kSideWest = 1;
inline constexpr int kSideNorth = 2;
inline constexpr int kSideSouth = 3;

struct JunctionConfig {
  double channel_width = 16.0;
  double q_in = 2.0;        // robots/second, split evenly over the two streams
  double arm_length = 40.0; // meters from center to each spawn line
  double robot_radius = 2.0;
};

/// One robot's initial condition and goal.
struct RobotSpec {
  int id = 0;
  RobotState start;
  RobotState goal;
  double radius = 2.0;
  double max_speed = 15.0;
  bool moving_horizon = false;
  int expected_exit = kSideNone;  // junction correctness; kSideNone elsewhere
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Circle;
  int n_robots = 10;
  double circle_radius = 50.0;
  double initial_speed = 15.0;
  double radius_min = 2.0;
  double radius_max = 3.0;
  double horizon = 0.0;  // seconds; 0 derives a per-kind default
  int num_states = 10;
  double timestep = 0.1;
  int internal_iterations = 50;
  int interrobot_iterations = 10;
  double damping = 0.4;
  int max_ticks = 3000;
  std::uint64_t seed = 1;
  double world_half_extent = 0.0;  // meters; 0 derives a per-kind default
  double sdf_cell = 0.5;
  FactorParams factors;
  CommConfig comm;
  JunctionConfig junction;
  std::vector<RobotSpec> custom_robots;
  std::vector<Polygon> custom_obstacles;

  void validate() const;
};

/// Fills every derived field (horizon, world extent, comm seed) so the result
/// is a complete, self-describing parameter set. Idempotent.
ScenarioConfig resolve_config(const ScenarioConfig& cfg);

/// Schedules junction arrivals: two one-way streams (eastbound and
/// northbound) each at q_in/2 robots/second on deterministic intervals with
/// seeded jitter, alternating between two lanes per stream. Ids follow
/// scheduled arrival order. A spawn blocked by traffic is deferred to the
/// next tick without losing its id.
class JunctionSpawner {
 public:
  JunctionSpawner(const ScenarioConfig& cfg);

  /// Robots due at `tick` (newly scheduled plus previously deferred),
  /// ascending id. The caller must spawn or defer() each one.
  std::vector<RobotSpec> take_due(int tick);
  void defer(const RobotSpec& spec);

  int deferrals() const { return deferrals_; }
  int scheduled_total() const { return static_cast<int>(schedule_.size()); }

 private:
  struct Slot {
    int tick;
    RobotSpec spec;
  };
  std::vector<Slot> schedule_;  // ascending (tick, id)
  std::size_t next_ = 0;
  std::vector<RobotSpec> deferred_;
  int deferrals_ = 0;
};

/// A fully built world: resolved config, initial robots, geometry, and (for
/// junctions) the arrival schedule.
struct Scenario {
  ScenarioConfig cfg;  // resolved
  std::vector<RobotSpec> initial_robots;
  std::vector<Polygon> obstacles;
  std::shared_ptr<const SdfGrid> sdf;
  std::unique_ptr<JunctionSpawner> spawner;  // junction only
  Box despawn_bounds;                        // leaving it removes the robot (junction)
  Box flow_region;                           // junction core, for flow metrics
};

Scenario build_scenario(const ScenarioConfig& cfg);

}  // namespace gbpplan
