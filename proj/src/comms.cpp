#include "gbpplan/comms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbpplan/rng.hpp"

namespace gbpplan {

std::map<int, std::set<int>> neighbors(const std::map<int, Eigen::Vector2d>& positions,
                                       double r_c) {
  if (r_c <= 0.0) throw std::invalid_argument("neighbors: r_c must be positive");
  std::map<int, std::set<int>> out;
  for (const auto& [id, pos] : positions) out[id];  // every robot gets a (possibly empty) set

  // Sweep over ids sorted by x so distant robots are pruned cheaply; the
  // result is identical to the all-pairs check.
  std::vector<std::pair<double, int>> by_x;
  by_x.reserve(positions.size());
  for (const auto& [id, pos] : positions) by_x.emplace_back(pos.x(), id);
  std::sort(by_x.begin(), by_x.end());

  for (std::size_t i = 0; i < by_x.size(); ++i) {
    const auto& pi = positions.at(by_x[i].second);
    for (std::size_t j = i + 1; j < by_x.size(); ++j) {
      if (by_x[j].first - by_x[i].first >= r_c) break;
      const auto& pj = positions.at(by_x[j].second);
      if ((pi - pj).norm() < r_c) {
        out[by_x[i].second].insert(by_x[j].second);
        out[by_x[j].second].insert(by_x[i].second);
      }
    }
  }
  return out;
}

std::set<int> sample_failures(const std::set<int>& connected, double gamma, std::uint64_t seed,
                              int tick, int receiver) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("sample_failures: gamma in [0,1]");
  const std::size_t n = connected.size();
  const auto m = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 0.5));
  if (m == 0) return {};

  std::vector<int> ids(connected.begin(), connected.end());  // ascending
  SplitMix rng{mix_key(seed, static_cast<std::uint64_t>(tick) + 1,
                       static_cast<std::uint64_t>(receiver) + 1)};
  // Partial Fisher-Yates: the first m entries are a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(ids[i], ids[j]);
  }
  return std::set<int>(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m));
}

const std::set<int> Transport::kEmpty{};

void Transport::begin_tick(int tick, const std::map<int, std::set<int>>& neighbor_sets) {
  tick_ = tick;
  drops_.clear();
  buffer_.clear();
  tick_stats_ = {};
  if (cfg_.gamma <= 0.0) return;
  for (const auto& [receiver, connected] : neighbor_sets) {
    auto d = sample_failures(connected, cfg_.gamma, cfg_.seed, tick, receiver);
    if (!d.empty()) drops_.emplace(receiver, std::move(d));
  }
}

const std::set<int>& Transport::drops_for(int receiver) const {
  auto it = drops_.find(receiver);
  return it == drops_.end() ? kEmpty : it->second;
}

void Transport::send(Envelope e) {
  ++tick_stats_.sent;
  ++run_stats_.sent;
  buffer_.push_back(std::move(e));
}

void Transport::exchange(const std::function<void(const Envelope&)>& deliver) {
  std::stable_sort(buffer_.begin(), buffer_.end(), [](const Envelope& a, const Envelope& b) {
    if (a.to_robot != b.to_robot) return a.to_robot < b.to_robot;
    if (a.from_robot != b.from_robot) return a.from_robot < b.from_robot;
    if (a.from_node != b.from_node) return a.from_node < b.from_node;
    return a.to_node < b.to_node;
  });
  for (const Envelope& e : buffer_) {
    if (drops_for(e.to_robot).count(e.from_robot)) {
      ++tick_stats_.dropped;
      ++run_stats_.dropped;
      continue;
    }
    ++tick_stats_.delivered;
    ++run_stats_.delivered;
    deliver(e);
  }
  buffer_.clear();
}

}  // namespace gbpplan
