#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gbpplan/comms.hpp"
#include "gbpplan/robot.hpp"
#include "gbpplan/scenario.hpp"

namespace gbpplan {

/// One robot's ground truth at the end of a tick, plus its current plan.
struct TraceRow {
  int tick = 0;
  int robot = 0;
  RobotState truth;
  bool collision = false;                // in contact with anything this tick
  std::vector<Eigen::Vector4d> planned;  // all K state estimates
};

struct TickStats {
  int tick = 0;
  int live = 0;
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
};

inline constexpr int kObstacleId = -1;

/// A contiguous run of contact ticks between a pair (or robot and obstacle).
struct CollisionEpisode {
  int a = 0;
  int b = kObstacleId;
  int start_tick = 0;
  int last_tick = 0;
};

struct RobotRecord {
  int id = 0;
  double radius = 0.0;
  double max_speed = 0.0;
  RobotState start;
  RobotState goal;
  bool moving_horizon = false;
  int spawn_tick = 0;
  int despawn_tick = -1;  // -1: alive at run end
  bool completed = false;
  int completion_tick = -1;
  int expected_exit = kSideNone;
  int exit_side = kSideNone;
};

struct RunResult {
  ScenarioConfig cfg;  // resolved; echoing it reproduces the run
  std::vector<TraceRow> rows;
  std::map<int, RobotRecord> robots;
  std::vector<TickStats> tick_stats;
  std::vector<CollisionEpisode> episodes;
  int tick_count = 0;
  bool complete = false;
  std::string abort_reason;  // empty on a clean run
  int spawn_deferrals = 0;
  TransportStats transport;
};

/// The world clock: owns every robot fragment, the transport, and the ground
/// truth, and advances them through the fixed per-tick phase sequence
/// (spawn/despawn, anchor ticks, discovery, internal sweeps, inter-robot
/// sweeps, truth update, collision check, trace append). Single-threaded and
/// deterministic for a fixed resolved config.
class World {
 public:
  explicit World(const ScenarioConfig& cfg);

  void step();

  int tick() const { return tick_; }
  double time() const { return tick_ * cfg_.timestep; }
  bool finished() const;  // circle/custom: everyone reached their goal
  bool aborted() const { return !result_.abort_reason.empty(); }

  const ScenarioConfig& config() const { return cfg_; }
  const std::map<int, std::unique_ptr<RobotFragment>>& robots() const { return robots_; }
  const std::map<int, RobotState>& truth() const { return truth_; }
  const Scenario& scenario() const { return scenario_; }

  RunResult take_result() &&;

 private:
  void spawn(const RobotSpec& spec);
  bool spawn_blocked(const RobotSpec& spec) const;
  void despawn_phase();
  void record_contact(int a, int b);

  ScenarioConfig cfg_;
  Scenario scenario_;
  Transport transport_;
  std::map<int, std::unique_ptr<RobotFragment>> robots_;
  std::map<int, RobotState> truth_;
  std::map<std::pair<int, int>, std::size_t> active_episodes_;  // key -> index into episodes
  std::map<int, bool> contact_now_;
  int tick_ = 0;
  RunResult result_;
};

/// Steps a world to completion (all goals reached) or cfg.max_ticks,
/// whichever comes first. `complete` means all goals reached for circle and
/// custom runs, and a clean full window for junction runs.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Columns: tick,id,x,y,xdot,ydot,collision. One row per live robot per tick.
void write_trace_csv(const RunResult& result, std::ostream& out);

/// JSON sidecar: full config echo, robot records, episodes, per-tick message
/// counts, and run flags.
void write_metadata_json(const RunResult& result, std::ostream& out);

}  // namespace gbpplan
