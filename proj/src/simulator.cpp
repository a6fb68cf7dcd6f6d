#include "gbpplan/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gbpplan/config.hpp"

namespace gbpplan {

namespace {

int boundary_side(const Eigen::Vector2d& p) {
  if (std::abs(p.x()) >= std::abs(p.y())) return p.x() > 0.0 ? kSideEast : kSideWest;
  return p.y() > 0.0 ? kSideNorth : kSideSouth;
}

}  // namespace

World::World(const ScenarioConfig& cfg)
    : cfg_(resolve_config(cfg)), scenario_(build_scenario(cfg_)), transport_(scenario_.cfg.comm) {
  result_.cfg = cfg_;
  for (const auto& spec : scenario_.initial_robots) spawn(spec);
}

void World::spawn(const RobotSpec& spec) {
  auto schedule = TrajectorySchedule::geometric(cfg_.num_states, cfg_.timestep, cfg_.horizon);
  robots_.emplace(spec.id, std::make_unique<RobotFragment>(
                               spec.id, spec.start, spec.goal, spec.radius, spec.max_speed,
                               std::move(schedule), cfg_.factors, scenario_.sdf,
                               spec.moving_horizon, cfg_.damping));
  truth_.emplace(spec.id, spec.start);

  RobotRecord rec;
  rec.id = spec.id;
  rec.radius = spec.radius;
  rec.max_speed = spec.max_speed;
  rec.start = spec.start;
  rec.goal = spec.goal;
  rec.moving_horizon = spec.moving_horizon;
  rec.spawn_tick = tick_;
  rec.expected_exit = spec.expected_exit;
  result_.robots[spec.id] = rec;
}

bool World::spawn_blocked(const RobotSpec& spec) const {
  for (const auto& [id, st] : truth_) {
    const double clearance =
        spec.radius + result_.robots.at(id).radius + cfg_.factors.epsilon;
    if ((st.pos - spec.start.pos).norm() < clearance) return true;
  }
  return false;
}

void World::despawn_phase() {
  std::vector<int> leaving;
  for (const auto& [id, st] : truth_)
    if (!scenario_.despawn_bounds.contains(st.pos)) leaving.push_back(id);
  for (int id : leaving) {
    RobotRecord& rec = result_.robots.at(id);
    rec.despawn_tick = tick_;
    rec.exit_side = boundary_side(truth_.at(id).pos);
    robots_.erase(id);
    truth_.erase(id);
  }
}

void World::record_contact(int a, int b) {
  contact_now_[a] = true;
  if (b != kObstacleId) contact_now_[b] = true;
  const std::pair<int, int> key{a, b};
  auto it = active_episodes_.find(key);
  if (it != active_episodes_.end()) {
    result_.episodes[it->second].last_tick = tick_;
  } else {
    active_episodes_.emplace(key, result_.episodes.size());
    result_.episodes.push_back({a, b, tick_, tick_});
  }
}

void World::step() {
  ++tick_;

  if (cfg_.kind == ScenarioKind::Junction) {
    despawn_phase();
    for (const auto& spec : scenario_.spawner->take_due(tick_)) {
      if (spawn_blocked(spec))
        scenario_.spawner->defer(spec);
      else
        spawn(spec);
    }
  }

  for (auto& [id, frag] : robots_) frag->tick(cfg_.timestep);

  std::map<int, Eigen::Vector2d> positions;
  for (const auto& [id, st] : truth_) positions.emplace(id, st.pos);
  const auto neighbor_sets = neighbors(positions, cfg_.comm.r_c);
  transport_.begin_tick(tick_, neighbor_sets);

  const PeerAccessor accessor = [this](int id) -> const RobotFragment* {
    auto it = robots_.find(id);
    return it == robots_.end() ? nullptr : it->second.get();
  };
  for (auto& [id, frag] : robots_)
    frag->update_interrobot_factors(neighbor_sets.at(id), accessor);

  run_plan_iterations(robots_, cfg_.internal_iterations, cfg_.interrobot_iterations, transport_);

  for (auto& [id, frag] : robots_) {
    const auto mu = frag->state_mean(0);
    const RobotState st = mu ? RobotState::from_stacked(*mu) : frag->current_anchor();
    truth_.at(id) = st;
    if (!st.finite() && result_.abort_reason.empty())
      result_.abort_reason =
          "robot " + std::to_string(id) + " has a non-finite state at tick " + std::to_string(tick_);
  }

  if (cfg_.kind != ScenarioKind::Junction) {
    for (const auto& [id, st] : truth_) {
      RobotRecord& rec = result_.robots.at(id);
      if (!rec.completed && (st.pos - rec.goal.pos).norm() <= rec.radius) {
        rec.completed = true;
        rec.completion_tick = tick_;
      }
    }
  }

  contact_now_.clear();
  for (const auto& [id, st] : truth_) contact_now_[id] = false;
  for (auto a = truth_.begin(); a != truth_.end(); ++a) {
    for (auto b = std::next(a); b != truth_.end(); ++b) {
      const double contact =
          result_.robots.at(a->first).radius + result_.robots.at(b->first).radius;
      if ((a->second.pos - b->second.pos).norm() < contact) record_contact(a->first, b->first);
    }
    if (scenario_.sdf->sample(a->second.pos).distance < result_.robots.at(a->first).radius)
      record_contact(a->first, kObstacleId);
  }
  for (auto it = active_episodes_.begin(); it != active_episodes_.end();) {
    if (result_.episodes[it->second].last_tick < tick_)
      it = active_episodes_.erase(it);
    else
      ++it;
  }

  for (const auto& [id, frag] : robots_) {
    TraceRow row;
    row.tick = tick_;
    row.robot = id;
    row.truth = truth_.at(id);
    row.collision = contact_now_.at(id);
    row.planned.reserve(frag->schedule().count());
    for (int k = 0; k < frag->schedule().count(); ++k) row.planned.push_back(frag->state_estimate(k));
    result_.rows.push_back(std::move(row));
  }

  const auto& ts = transport_.tick_stats();
  result_.tick_stats.push_back(
      {tick_, static_cast<int>(robots_.size()), ts.sent, ts.delivered, ts.dropped});
  result_.tick_count = tick_;
}

bool World::finished() const {
  if (cfg_.kind == ScenarioKind::Junction) return false;
  if (result_.robots.empty()) return false;
  for (const auto& [id, rec] : result_.robots)
    if (!rec.completed) return false;
  return true;
}

RunResult World::take_result() && {
  result_.transport = transport_.run_stats();
  result_.spawn_deferrals = scenario_.spawner ? scenario_.spawner->deferrals() : 0;
  return std::move(result_);
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  World world(cfg);
  while (world.tick() < world.config().max_ticks && !world.finished() && !world.aborted())
    world.step();

  const bool junction = world.config().kind == ScenarioKind::Junction;
  RunResult result = std::move(world).take_result();
  if (!result.abort_reason.empty()) {
    result.complete = false;
  } else if (junction) {
    result.complete = result.tick_count >= result.cfg.max_ticks;
  } else {
    result.complete = !result.robots.empty();
    for (const auto& [id, rec] : result.robots)
      if (!rec.completed) result.complete = false;
  }
  return result;
}

void write_trace_csv(const RunResult& result, std::ostream& out) {
  out << "tick,id,x,y,xdot,ydot,collision\n";
  char buf[256];
  for (const TraceRow& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%d\n", row.tick, row.robot,
                  row.truth.pos.x(), row.truth.pos.y(), row.truth.vel.x(), row.truth.vel.y(),
                  row.collision ? 1 : 0);
    out << buf;
  }
}

void write_metadata_json(const RunResult& result, std::ostream& out) {
  nlohmann::json j;
  j["config"] = config_to_json(result.cfg);
  j["complete"] = result.complete;
  j["ticks"] = result.tick_count;
  j["abort"] = result.abort_reason;
  j["spawn_deferrals"] = result.spawn_deferrals;
  j["transport"] = {{"sent", result.transport.sent},
                    {"delivered", result.transport.delivered},
                    {"dropped", result.transport.dropped}};

  auto state_array = [](const RobotState& s) {
    return nlohmann::json::array({s.pos.x(), s.pos.y(), s.vel.x(), s.vel.y()});
  };
  j["robots"] = nlohmann::json::array();
  for (const auto& [id, rec] : result.robots) {
    j["robots"].push_back({{"id", rec.id},
                           {"radius", rec.radius},
                           {"max_speed", rec.max_speed},
                           {"start", state_array(rec.start)},
                           {"goal", state_array(rec.goal)},
                           {"moving_horizon", rec.moving_horizon},
                           {"spawn_tick", rec.spawn_tick},
                           {"despawn_tick", rec.despawn_tick},
                           {"completed", rec.completed},
                           {"completion_tick", rec.completion_tick},
                           {"expected_exit", rec.expected_exit},
                           {"exit_side", rec.exit_side}});
  }
  j["episodes"] = nlohmann::json::array();
  for (const auto& e : result.episodes)
    j["episodes"].push_back(
        {{"a", e.a}, {"b", e.b}, {"start_tick", e.start_tick}, {"last_tick", e.last_tick}});
  j["tick_stats"] = nlohmann::json::array();
  for (const auto& t : result.tick_stats)
    j["tick_stats"].push_back({t.tick, t.live, t.sent, t.delivered, t.dropped});

  out << j.dump(2) << "\n";
}

}  // namespace gbpplan
