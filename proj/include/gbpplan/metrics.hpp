#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gbpplan/simulator.hpp"

namespace gbpplan {

/// Log Dimensionless Jerk of a uniformly sampled velocity series:
///   -ln( T^3 / v_max^2 * integral |v''|^2 dt )
/// with v'' by central differences and the integral by trapezoid over the
/// interior samples. Zero total jerk returns +infinity (perfectly smooth);
/// fewer than 4 samples, non-uniform timestamps, or zero v_max throw.
double ldj(const std::vector<std::pair<double, Eigen::Vector2d>>& velocity);

/// Ground-truth path length from spawn to the completion tick. Empty for
/// robots that never completed.
std::optional<double> distance_travelled(const RunResult& result, int id);

/// Time of the last completion; empty unless every robot completed.
std::optional<double> makespan(const RunResult& result);

/// LDJ over the robot's executed spawn-to-completion velocity profile.
std::optional<double> ldj_for_robot(const RunResult& result, int id);

struct RobotMetrics {
  int id = 0;
  bool complete = false;
  double distance = std::numeric_limits<double>::quiet_NaN();
  double completion_time = std::numeric_limits<double>::quiet_NaN();
  double ldj = std::numeric_limits<double>::quiet_NaN();  // +inf: perfectly smooth
  int collisions = 0;                                     // episodes involving this robot
};

std::vector<RobotMetrics> per_robot_metrics(const RunResult& result);

struct FlowReport {
  double q_in = 0.0;   // entries into the region per second over the window
  double q_out = 0.0;  // exits per second
  int window = 0;      // ticks actually covered
  int violations = 0;  // wrong-direction exits + collision episodes in the window
};

/// Flow through `region` over the trailing `window_ticks` ticks.
FlowReport flowrates(const RunResult& result, const Box& region, int window_ticks);

struct RunAggregates {
  bool complete = false;
  double makespan = std::numeric_limits<double>::quiet_NaN();
  double mean_distance = std::numeric_limits<double>::quiet_NaN();
  double mean_ldj = std::numeric_limits<double>::quiet_NaN();  // finite values only
  int collision_episodes = 0;
  int robots = 0;
  int completed = 0;
};

RunAggregates aggregate(const RunResult& result);

/// Flat metrics document: aggregates, per-robot rows, and (for junction
/// runs) the flow report. The +infinity LDJ sentinel serializes as "inf".
nlohmann::json metrics_json(const RunResult& result);

void write_robot_metrics_csv(const RunResult& result, std::ostream& out);

}  // namespace gbpplan
