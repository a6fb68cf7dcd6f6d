#include "gbpplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace gbpplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The robot's trace rows between spawn and `last_tick`, in tick order.
std::vector<const TraceRow*> rows_for(const RunResult& result, int id, int last_tick) {
  std::vector<const TraceRow*> rows;
  for (const TraceRow& row : result.rows) {
    if (row.robot != id || row.tick > last_tick) continue;
    rows.push_back(&row);
  }
  return rows;
}

nlohmann::json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

double ldj(const std::vector<std::pair<double, Eigen::Vector2d>>& velocity) {
  const std::size_t n = velocity.size();
  if (n < 4) throw std::invalid_argument("ldj: need at least 4 samples");
  const double dt = velocity[1].first - velocity[0].first;
  if (dt <= 0.0) throw std::invalid_argument("ldj: non-increasing timestamps");
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double gap = velocity[i + 1].first - velocity[i].first;
    if (std::abs(gap - dt) > 1e-9 * std::max(1.0, dt))
      throw std::invalid_argument("ldj: samples must be uniformly spaced");
  }

  double v_max = 0.0;
  for (const auto& [t, v] : velocity) v_max = std::max(v_max, v.norm());
  if (v_max == 0.0) throw std::invalid_argument("ldj: zero peak speed");

  // |v''|^2 at interior samples, trapezoid across them.
  double sum = 0.0, first = 0.0, last = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Eigen::Vector2d acc2 =
        (velocity[i + 1].second - 2.0 * velocity[i].second + velocity[i - 1].second) / (dt * dt);
    const double sq = acc2.squaredNorm();
    sum += sq;
    if (i == 1) first = sq;
    if (i + 2 == n) last = sq;
  }
  const double integral = dt * (sum - 0.5 * (first + last));
  if (integral <= 0.0) return kInf;

  const double span = velocity.back().first - velocity.front().first;
  return -std::log(span * span * span / (v_max * v_max) * integral);
}

std::optional<double> distance_travelled(const RunResult& result, int id) {
  const auto rec_it = result.robots.find(id);
  if (rec_it == result.robots.end() || !rec_it->second.completed) return std::nullopt;
  const RobotRecord& rec = rec_it->second;

  double dist = 0.0;
  Eigen::Vector2d prev = rec.start.pos;
  for (const TraceRow* row : rows_for(result, id, rec.completion_tick)) {
    dist += (row->truth.pos - prev).norm();
    prev = row->truth.pos;
  }
  return dist;
}

std::optional<double> makespan(const RunResult& result) {
  if (result.robots.empty()) return std::nullopt;
  int last = 0;
  for (const auto& [id, rec] : result.robots) {
    if (!rec.completed) return std::nullopt;
    last = std::max(last, rec.completion_tick);
  }
  return last * result.cfg.timestep;
}

std::optional<double> ldj_for_robot(const RunResult& result, int id) {
  const auto rec_it = result.robots.find(id);
  if (rec_it == result.robots.end() || !rec_it->second.completed) return std::nullopt;
  const RobotRecord& rec = rec_it->second;

  std::vector<std::pair<double, Eigen::Vector2d>> series;
  series.emplace_back(rec.spawn_tick * result.cfg.timestep, rec.start.vel);
  for (const TraceRow* row : rows_for(result, id, rec.completion_tick))
    series.emplace_back(row->tick * result.cfg.timestep, row->truth.vel);
  if (series.size() < 4) return std::nullopt;
  return ldj(series);
}

std::vector<RobotMetrics> per_robot_metrics(const RunResult& result) {
  std::vector<RobotMetrics> out;
  for (const auto& [id, rec] : result.robots) {
    RobotMetrics m;
    m.id = id;
    m.complete = rec.completed;
    if (const auto d = distance_travelled(result, id)) m.distance = *d;
    if (rec.completed) m.completion_time = rec.completion_tick * result.cfg.timestep;
    if (const auto l = ldj_for_robot(result, id)) m.ldj = *l;
    for (const auto& e : result.episodes)
      if (e.a == id || e.b == id) ++m.collisions;
    out.push_back(m);
  }
  return out;
}

FlowReport flowrates(const RunResult& result, const Box& region, int window_ticks) {
  FlowReport report;
  if (result.tick_count <= 0 || window_ticks <= 0) return report;
  const int window = std::min(window_ticks, result.tick_count);
  const int start_tick = result.tick_count - window + 1;
  report.window = window;

  // Walk each robot's path; a crossing of the region boundary inside the
  // window counts once.
  std::map<int, Eigen::Vector2d> prev;
  for (const auto& [id, rec] : result.robots) prev[id] = rec.start.pos;
  int entries = 0, exits = 0;
  for (const TraceRow& row : result.rows) {
    const Eigen::Vector2d p = row.truth.pos;
    const Eigen::Vector2d q = prev.at(row.robot);
    if (row.tick >= start_tick) {
      const bool was_in = region.contains(q);
      const bool is_in = region.contains(p);
      if (!was_in && is_in) ++entries;
      if (was_in && !is_in) ++exits;
    }
    prev[row.robot] = p;
  }
  const double seconds = window * result.cfg.timestep;
  report.q_in = entries / seconds;
  report.q_out = exits / seconds;

  for (const auto& e : result.episodes)
    if (e.last_tick >= start_tick) ++report.violations;
  for (const auto& [id, rec] : result.robots)
    if (rec.despawn_tick >= start_tick && rec.expected_exit != kSideNone &&
        rec.exit_side != rec.expected_exit)
      ++report.violations;
  return report;
}

RunAggregates aggregate(const RunResult& result) {
  RunAggregates agg;
  agg.complete = result.complete;
  agg.collision_episodes = static_cast<int>(result.episodes.size());
  agg.robots = static_cast<int>(result.robots.size());
  if (const auto m = makespan(result)) agg.makespan = *m;

  double dist_sum = 0.0, ldj_sum = 0.0;
  int dist_n = 0, ldj_n = 0;
  for (const RobotMetrics& m : per_robot_metrics(result)) {
    if (m.complete) ++agg.completed;
    if (std::isfinite(m.distance)) {
      dist_sum += m.distance;
      ++dist_n;
    }
    if (std::isfinite(m.ldj)) {  // the +inf sentinel stays out of the mean
      ldj_sum += m.ldj;
      ++ldj_n;
    }
  }
  if (dist_n > 0) agg.mean_distance = dist_sum / dist_n;
  if (ldj_n > 0) agg.mean_ldj = ldj_sum / ldj_n;
  return agg;
}

nlohmann::json metrics_json(const RunResult& result) {
  const RunAggregates agg = aggregate(result);
  nlohmann::json j;
  j["complete"] = agg.complete;
  j["robots"] = agg.robots;
  j["completed"] = agg.completed;
  j["collision_episodes"] = agg.collision_episodes;
  j["makespan"] = json_number(agg.makespan);
  j["mean_distance"] = json_number(agg.mean_distance);
  j["mean_ldj"] = json_number(agg.mean_ldj);

  j["per_robot"] = nlohmann::json::array();
  for (const RobotMetrics& m : per_robot_metrics(result)) {
    j["per_robot"].push_back({{"id", m.id},
                              {"complete", m.complete},
                              {"distance", json_number(m.distance)},
                              {"completion_time", json_number(m.completion_time)},
                              {"ldj", json_number(m.ldj)},
                              {"collisions", m.collisions}});
  }

  if (result.cfg.kind == ScenarioKind::Junction) {
    const double w = result.cfg.junction.channel_width / 2.0;
    const int window = result.tick_count > 200 ? result.tick_count - 100
                                               : std::max(1, result.tick_count / 2);
    const FlowReport flow = flowrates(result, {{-w, -w}, {w, w}}, window);
    j["flow"] = {{"q_in", flow.q_in},
                 {"q_out", flow.q_out},
                 {"window", flow.window},
                 {"violations", flow.violations}};
  }
  return j;
}

void write_robot_metrics_csv(const RunResult& result, std::ostream& out) {
  out << "id,complete,distance,completion_time,ldj,collisions\n";
  char buf[160];
  for (const RobotMetrics& m : per_robot_metrics(result)) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%d\n", m.id, m.complete ? 1 : 0,
                  m.distance, m.completion_time, m.ldj, m.collisions);
    out << buf;
  }
}

}  // namespace gbpplan
