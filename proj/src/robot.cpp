#include "gbpplan/robot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gbpplan {

namespace {

bool is_internal(const FactorNode& f) { return f.kind != FactorKind::InterRobot; }

}  // namespace

TrajectorySchedule TrajectorySchedule::geometric(int num_states, double timestep, double horizon) {
  if (num_states < 2) throw std::invalid_argument("schedule: need at least 2 states");
  if (timestep <= 0.0) throw std::invalid_argument("schedule: timestep must be positive");
  const int gaps = num_states - 1;
  if (horizon < gaps * timestep - 1e-9)
    throw std::invalid_argument("schedule: horizon shorter than num_states * timestep");

  auto total = [&](double rho) {
    double sum = 0.0, g = timestep;
    for (int k = 0; k < gaps; ++k, g *= rho) sum += g;
    return sum;
  };

  double lo = 1.0, hi = 1.0;
  while (total(hi) < horizon && hi < 64.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < horizon ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);

  TrajectorySchedule s;
  s.times.resize(num_states);
  s.times[0] = 0.0;
  double g = timestep;
  for (int k = 0; k < gaps; ++k, g *= rho) s.times[k + 1] = s.times[k] + g;
  s.times[gaps] = horizon;  // pin the bisection residual onto the last state
  s.validate(timestep);
  return s;
}

void TrajectorySchedule::validate(double timestep) const {
  if (count() < 2) throw std::invalid_argument("schedule: need at least 2 states");
  if (times[0] != 0.0) throw std::invalid_argument("schedule: t_0 must be 0");
  if (std::abs(gap(0) - timestep) > 1e-9 * std::max(1.0, timestep))
    throw std::invalid_argument("schedule: first gap must equal the simulator timestep");
  for (int k = 0; k + 2 < count(); ++k)
    if (gap(k + 1) < gap(k) - 1e-9)
      throw std::invalid_argument("schedule: gaps must be non-decreasing");
}

RobotFragment::RobotFragment(int id, const RobotState& start, const RobotState& goal,
                             double radius, double max_speed, TrajectorySchedule schedule,
                             const FactorParams& params, std::shared_ptr<const SdfGrid> sdf,
                             bool moving_horizon, double damping)
    : id_(id), radius_(radius), max_speed_(max_speed), goal_(goal),
      schedule_(std::move(schedule)), params_(params), sdf_(std::move(sdf)),
      moving_horizon_(moving_horizon), base_timestep_(0.0) {
  if (id < 0 || id >= kMaxRobots) throw std::invalid_argument("RobotFragment: bad id");
  if (radius_ <= 0.0 || max_speed_ <= 0.0)
    throw std::invalid_argument("RobotFragment: radius and max_speed must be positive");
  if (!start.finite() || !goal.finite())
    throw std::invalid_argument("RobotFragment: non-finite start or goal");
  if (schedule_.count() < 2) throw std::invalid_argument("RobotFragment: schedule too short");
  base_timestep_ = schedule_.gap(0);
  params_.validate();
  if (!sdf_) throw std::invalid_argument("RobotFragment: null sdf");
  graph_.damping = damping;

  const int K = schedule_.count();
  const double horizon = schedule_.horizon();

  // The far pose anchor. A stationary horizon sits on the goal; a moving one
  // starts at the point reachable within the horizon and walks toward the
  // goal every tick.
  RobotState horizon_state = goal_;
  if (moving_horizon_) {
    const Eigen::Vector2d to_goal = goal_.pos - start.pos;
    const double dist = to_goal.norm();
    if (dist > 0.0) {
      const Eigen::Vector2d dir = to_goal / dist;
      horizon_state.pos = start.pos + dir * std::min(max_speed_ * horizon, dist);
      horizon_state.vel = dir * max_speed_;
    } else {
      horizon_state = start;
      horizon_state.vel.setZero();
    }
  }

  // Straight-line seed between the two anchors, start velocity held constant.
  for (int k = 0; k < K; ++k) {
    VariableNode& v = graph_.add_variable(vid(k), kStateDim);
    const double a = schedule_.times[k] / horizon;
    RobotState seed;
    seed.pos = (1.0 - a) * start.pos + a * horizon_state.pos;
    seed.vel = start.vel;
    v.set_initial_mean(seed.stacked());
  }

  graph_.add_factor(
      make_pose_factor(make_factor_id(FactorKind::Pose, id_, 0, 0), vid(0), start, params_.sigma_p));
  graph_.add_factor(make_pose_factor(make_factor_id(FactorKind::Pose, id_, 0, K - 1), vid(K - 1),
                                     horizon_state, params_.sigma_p));

  for (int k = 0; k + 1 < K; ++k) {
    FactorNode f = make_dynamics_factor(make_factor_id(FactorKind::Dynamics, id_, 0, k), vid(k),
                                        vid(k + 1), schedule_.gap(k), params_.sigma_d);
    f.linearization_point.head(kStateDim) = graph_.variables.at(vid(k)).mean_hint;
    f.linearization_point.tail(kStateDim) = graph_.variables.at(vid(k + 1)).mean_hint;
    graph_.add_factor(std::move(f));
  }

  for (int k = 0; k < K; ++k) {
    graph_.add_factor(make_obstacle_factor(
        make_factor_id(FactorKind::Obstacle, id_, 0, k), vid(k), sdf_, radius_, params_.sigma_o,
        Eigen::Vector4d(graph_.variables.at(vid(k)).mean_hint)));
  }
}

RobotState RobotFragment::current_anchor() const {
  const auto& f = graph_.factors.at(make_factor_id(FactorKind::Pose, id_, 0, 0));
  return RobotState::from_stacked(f.z);
}

RobotState RobotFragment::horizon_anchor() const {
  const auto& f =
      graph_.factors.at(make_factor_id(FactorKind::Pose, id_, 0, schedule_.count() - 1));
  return RobotState::from_stacked(f.z);
}

std::optional<Eigen::Vector4d> RobotFragment::state_mean(int k) const {
  auto mu = graph_.variables.at(vid(k)).belief.try_mean();
  if (!mu) return std::nullopt;
  return Eigen::Vector4d(*mu);
}

Eigen::Vector4d RobotFragment::state_estimate(int k) const {
  return Eigen::Vector4d(graph_.variables.at(vid(k)).mean_hint);
}

void RobotFragment::tick(double dt) {
  const auto m1 = state_mean(1);
  if (!m1) {
    ++anchor_holds_;  // no usable plan yet; hold both anchors
    return;
  }
  const Eigen::Vector4d m0 = state_mean(0).value_or(current_anchor().stacked());

  // The plan's first segment covers [0, t_1]; evaluate it at dt. The robot
  // cannot outrun its own top speed, so the executed step is capped even
  // when a late plan demands a sprint.
  const double alpha = std::clamp(dt / schedule_.times[1], 0.0, 1.0);
  const Eigen::Vector4d planned = (1.0 - alpha) * m0 + alpha * (*m1);
  auto& anchor = graph_.factors.at(make_factor_id(FactorKind::Pose, id_, 0, 0));
  const RobotState cur = RobotState::from_stacked(anchor.z);
  RobotState next = RobotState::from_stacked(planned);
  const Eigen::Vector2d step = next.pos - cur.pos;
  const double step_max = max_speed_ * dt;
  if (step.norm() > step_max) next.pos = cur.pos + step * (step_max / step.norm());
  if (next.vel.norm() > max_speed_) next.vel *= max_speed_ / next.vel.norm();
  anchor.z = next.stacked();

  if (moving_horizon_) {
    auto& hf = graph_.factors.at(make_factor_id(FactorKind::Pose, id_, 0, schedule_.count() - 1));
    RobotState h = RobotState::from_stacked(hf.z);
    const Eigen::Vector2d to_goal = goal_.pos - h.pos;
    const double dist = to_goal.norm();
    if (dist > 0.0) {
      const Eigen::Vector2d dir = to_goal / dist;
      const double speed = std::min(max_speed_, dist / dt);
      h.pos += dir * speed * dt;
      h.vel = dir * speed;
    } else {
      h.vel.setZero();
    }
    hf.z = h.stacked();
  } else {
    contract_schedule(dt);
  }
}

void RobotFragment::contract_schedule(double dt) {
  const int K = schedule_.count();
  const double floor = (K - 1) * base_timestep_;
  const double target = std::max(schedule_.horizon() - dt, floor);
  if (target >= schedule_.horizon() - 1e-12) return;  // already at the floor

  schedule_ = TrajectorySchedule::geometric(K, base_timestep_, target);
  for (int k = 0; k + 1 < K; ++k)
    retime_dynamics_factor(graph_.factors.at(make_factor_id(FactorKind::Dynamics, id_, 0, k)),
                           schedule_.gap(k), params_.sigma_d);
  for (int j : connected_)
    for (int k = 1; k <= K - 2; ++k)
      retime_interrobot_factor(graph_.factors.at(make_factor_id(FactorKind::InterRobot, id_, j, k)),
                               schedule_.times[k], params_.sigma_r);
}

void RobotFragment::update_interrobot_factors(const std::set<int>& nbrs,
                                              const PeerAccessor& peers) {
  const int K = schedule_.count();

  std::vector<int> stale;
  for (int j : connected_)
    if (!nbrs.count(j)) stale.push_back(j);
  for (int j : stale) {
    for (int k = 1; k <= K - 2; ++k) {
      graph_.remove_factor(make_factor_id(FactorKind::InterRobot, id_, j, k));
      graph_.variables.at(vid(k)).inbox.erase(make_factor_id(FactorKind::InterRobot, j, id_, k));
      peer_means_.erase({j, k});
    }
    connected_.erase(j);
  }

  for (int j : nbrs) {
    if (j == id_ || connected_.count(j)) continue;
    const RobotFragment* peer = peers(j);
    if (peer == nullptr) continue;  // unreachable this tick; retry next
    FactorParams p = params_;
    // Mirrored pair must agree on r*; fold both radii into the shared radius
    // parameter so r* = r_a + r_b + epsilon on both sides.
    p.robot_radius = 0.5 * (radius_ + peer->radius());
    for (int k = 1; k <= K - 2; ++k) {
      Vec x0(2 * kStateDim);
      x0.head(kStateDim) = state_estimate(k);
      x0.tail(kStateDim) = peer->state_estimate(k);
      graph_.add_factor(make_interrobot_factor(make_factor_id(FactorKind::InterRobot, id_, j, k),
                                               vid(k), make_var_id(j, k), schedule_.times[k], p,
                                               x0));
      graph_.variables.at(vid(k)).inbox.emplace(make_factor_id(FactorKind::InterRobot, j, id_, k),
                                                CanonicalGaussian(kStateDim));
      peer_means_[{j, k}] = peer->state_estimate(k);
    }
    connected_.insert(j);
  }
}

void RobotFragment::internal_iterations(int sweeps) { graph_.iterate(sweeps, is_internal); }

MeanResolver RobotFragment::interrobot_resolver() const {
  return [this](VarId v) -> std::optional<Vec> {
    if (var_robot(v) == id_) {
      const auto& node = graph_.variables.at(v);
      if (!node.mean_valid) return std::nullopt;
      return node.mean_hint;
    }
    auto it = peer_means_.find({var_robot(v), var_state(v)});
    if (it == peer_means_.end()) return std::nullopt;
    return Vec(it->second);
  };
}

void RobotFragment::send_interrobot_var_messages(Transport& transport) {
  for (auto& [v, node] : graph_.variables) {
    for (auto& [fid, slot] : node.inbox) {
      if (factor_id_kind(fid) != FactorKind::InterRobot) continue;
      CanonicalGaussian msg = variable_to_factor_message(node, fid);
      const int owner = factor_id_owner(fid);
      if (owner == id_) {
        graph_.factors.at(fid).inbox.at(v) = std::move(msg);
      } else {
        Envelope e;
        e.from_robot = id_;
        e.to_robot = owner;
        e.from_node = v;
        e.to_node = fid;
        e.to_factor = true;
        e.payload = std::move(msg);
        e.lin_mean = state_estimate(var_state(v));
        transport.send(std::move(e));
      }
    }
  }
}

void RobotFragment::send_interrobot_factor_messages(Transport& transport) {
  const MeanResolver resolve = interrobot_resolver();
  for (auto& [fid, f] : graph_.factors) {
    if (f.kind != FactorKind::InterRobot) continue;
    relinearize_factor(f, resolve);
    factor_likelihood(f);
    for (VarId target : f.variables) {
      const CanonicalGaussian& out = factor_to_variable_message(f, target, graph_.damping);
      if (var_robot(target) == id_) {
        graph_.variables.at(target).inbox.at(fid) = out;
      } else {
        Envelope e;
        e.from_robot = id_;
        e.to_robot = var_robot(target);
        e.from_node = fid;
        e.to_node = target;
        e.to_factor = false;
        e.payload = out;
        e.lin_mean = state_estimate(factor_id_state(fid));
        transport.send(std::move(e));
      }
    }
  }
}

void RobotFragment::update_all_beliefs() {
  for (auto& [v, node] : graph_.variables) variable_belief_update(node);
}

void RobotFragment::deliver(const Envelope& e) {
  // Messages aimed at nodes this side no longer has (factor churn raced a
  // despawn or range change) are simply stale traffic; drop them.
  if (e.to_factor) {
    auto it = graph_.factors.find(e.to_node);
    if (it == graph_.factors.end()) return;
    auto slot = it->second.inbox.find(e.from_node);
    if (slot == it->second.inbox.end()) return;
    slot->second = e.payload;
    peer_means_[{e.from_robot, var_state(e.from_node)}] = e.lin_mean;
  } else {
    auto it = graph_.variables.find(e.to_node);
    if (it == graph_.variables.end()) return;
    auto slot = it->second.inbox.find(e.from_node);
    if (slot == it->second.inbox.end()) return;
    slot->second = e.payload;
    peer_means_[{e.from_robot, factor_id_state(e.from_node)}] = e.lin_mean;
  }
}

void run_plan_iterations(const std::map<int, std::unique_ptr<RobotFragment>>& robots,
                         int internal_sweeps, int interrobot_sweeps, Transport& transport) {
  for (const auto& [id, r] : robots) r->internal_iterations(internal_sweeps);

  const auto deliver = [&robots](const Envelope& e) {
    auto it = robots.find(e.to_robot);
    if (it != robots.end()) it->second->deliver(e);
  };

  for (int s = 0; s < interrobot_sweeps; ++s) {
    for (const auto& [id, r] : robots) r->send_interrobot_var_messages(transport);
    transport.exchange(deliver);
    for (const auto& [id, r] : robots) r->send_interrobot_factor_messages(transport);
    transport.exchange(deliver);
    for (const auto& [id, r] : robots) r->update_all_beliefs();
  }
}

}  // namespace gbpplan
