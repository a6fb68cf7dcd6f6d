#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "gbpplan/comms.hpp"
#include "gbpplan/factors.hpp"
#include "gbpplan/gbp.hpp"
#include "gbpplan/sdf.hpp"

namespace gbpplan {

/// Lookahead times 0 = t_0 < t_1 < ... of the K planned states. The first gap
/// equals the simulator timestep (the next planned state is one tick ahead)
/// and gaps never shrink with lookahead.
struct TrajectorySchedule {
  std::vector<double> times;

  int count() const { return static_cast<int>(times.size()); }
  double horizon() const { return times.back(); }
  double gap(int k) const { return times[k + 1] - times[k]; }

  /// Geometric gap growth: gap_k = timestep * rho^k with rho >= 1 solved so
  /// the gaps sum to `horizon`. Requires horizon >= (num_states-1)*timestep.
  static TrajectorySchedule geometric(int num_states, double timestep, double horizon);

  void validate(double timestep) const;
};

class RobotFragment;
using PeerAccessor = std::function<const RobotFragment*(int)>;

/// One robot's factor-graph fragment: K state variables chained by dynamics
/// factors, anchored by strong pose factors at both ends, one obstacle factor
/// per state, and mirrored inter-robot factors toward each connected peer.
/// The fragment owns only its local nodes; edges to peers are driven by
/// messages over a Transport.
class RobotFragment {
 public:
  RobotFragment(int id, const RobotState& start, const RobotState& goal, double radius,
                double max_speed, TrajectorySchedule schedule, const FactorParams& params,
                std::shared_ptr<const SdfGrid> sdf, bool moving_horizon, double damping);

  int id() const { return id_; }
  double radius() const { return radius_; }
  double max_speed() const { return max_speed_; }
  const RobotState& goal() const { return goal_; }
  const TrajectorySchedule& schedule() const { return schedule_; }
  const FactorParams& params() const { return params_; }
  const std::set<int>& connected() const { return connected_; }
  GbpGraph& graph() { return graph_; }
  const GbpGraph& graph() const { return graph_; }

  RobotState current_anchor() const;
  RobotState horizon_anchor() const;

  /// Belief mean of planned state k, if the belief carries information.
  std::optional<Eigen::Vector4d> state_mean(int k) const;
  /// Best available value for state k: belief mean, else the last usable one.
  Eigen::Vector4d state_estimate(int k) const;

  /// Advances the plan by dt. The current-state anchor moves to the plan
  /// interpolated at t_0 + dt, capped at max_speed. A moving horizon keeps
  /// its lookahead window and steps the far anchor toward the goal at
  /// min(max_speed, remaining/dt); a stationary horizon stays on the goal
  /// while the remaining lookahead contracts by dt (the arrival deadline is
  /// fixed in wall clock), floored at (K-1) gaps of one timestep. With no
  /// usable plan yet the anchors hold and a diagnostic counter bumps.
  void tick(double dt);

  /// Creates/deletes mirrored inter-robot factors so they exist exactly for
  /// `nbrs`, on states 1..K-2. A peer the accessor cannot resolve is treated
  /// as out of range this tick and retried on the next. Recreated edges start
  /// from fresh zero-information messages.
  void update_interrobot_factors(const std::set<int>& nbrs, const PeerAccessor& peers);

  void internal_iterations(int sweeps);

  // Inter-robot sweep phases, coordinated by run_plan_iterations.
  void send_interrobot_var_messages(Transport& transport);
  void send_interrobot_factor_messages(Transport& transport);
  void update_all_beliefs();
  void deliver(const Envelope& e);

  int anchor_holds() const { return anchor_holds_; }

 private:
  VarId vid(int k) const { return make_var_id(id_, k); }
  MeanResolver interrobot_resolver() const;
  void contract_schedule(double dt);

  int id_;
  double radius_;
  double max_speed_;
  RobotState goal_;
  TrajectorySchedule schedule_;
  FactorParams params_;
  std::shared_ptr<const SdfGrid> sdf_;
  bool moving_horizon_;
  double base_timestep_;
  GbpGraph graph_;
  std::set<int> connected_;
  std::map<std::pair<int, int>, Eigen::Vector4d> peer_means_;  // (peer, k) -> state
  int anchor_holds_ = 0;
};

/// One planning round across all robots: every fragment runs its internal
/// sweeps, then `interrobot_sweeps` synchronized rounds of inter-robot
/// message passing flow through the transport (whose current-tick drop sets
/// apply). Iteration order is ascending robot id throughout.
void run_plan_iterations(const std::map<int, std::unique_ptr<RobotFragment>>& robots,
                         int internal_sweeps, int interrobot_sweeps, Transport& transport);

}  // namespace gbpplan
