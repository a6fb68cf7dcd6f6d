#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "gbpplan/gaussian.hpp"
#include "gbpplan/gbp.hpp"

namespace gbpplan {

struct CommConfig {
  double r_c = 50.0;        // connection radius (meters), strict <
  double gamma = 0.0;       // fraction of connected neighbors dropped per tick
  std::uint64_t seed = 1;   // failure sampling stream
};

/// Symmetric neighbor sets: j is a neighbor of i iff i != j and
/// |pi - pj| < r_c (strict; coincident distinct robots are in range).
std::map<int, std::set<int>> neighbors(const std::map<int, Eigen::Vector2d>& positions,
                                       double r_c);

/// The floor(gamma * n + 0.5) neighbors robot `receiver` fails to hear this
/// tick, drawn without replacement. Deterministic in (seed, tick, receiver,
/// connected): unrelated scenario parameters do not perturb the draw.
std::set<int> sample_failures(const std::set<int>& connected, double gamma, std::uint64_t seed,
                              int tick, int receiver);

/// One GBP message in flight between two robots' graph fragments. `lin_mean`
/// carries the sender's belief mean for its own state at the edge's timestep,
/// which the receiver uses to relinearize its mirrored factor.
struct Envelope {
  int from_robot = 0;
  int to_robot = 0;
  std::int64_t from_node = 0;  // VarId or FactorId of the sender
  std::int64_t to_node = 0;    // FactorId or VarId of the destination
  bool to_factor = false;      // discriminates the destination id space
  CanonicalGaussian payload;
  Eigen::Vector4d lin_mean = Eigen::Vector4d::Zero();
};

struct TransportStats {
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
};

/// Synchronous per-tick message fabric. Each tick starts with a fresh,
/// seeded drop set per receiving robot that stays fixed across every sweep of
/// that tick; exchange() then delivers buffered envelopes in deterministic
/// (receiver, sender, node) order, discarding those from dropped senders so
/// receivers keep whatever stale message the edge last carried.
class Transport {
 public:
  explicit Transport(CommConfig cfg) : cfg_(cfg) {}

  void begin_tick(int tick, const std::map<int, std::set<int>>& neighbor_sets);
  const std::set<int>& drops_for(int receiver) const;

  void send(Envelope e);
  void exchange(const std::function<void(const Envelope&)>& deliver);

  const TransportStats& tick_stats() const { return tick_stats_; }
  const TransportStats& run_stats() const { return run_stats_; }
  const CommConfig& config() const { return cfg_; }

 private:
  CommConfig cfg_;
  int tick_ = -1;
  std::map<int, std::set<int>> drops_;
  std::vector<Envelope> buffer_;
  TransportStats tick_stats_;
  TransportStats run_stats_;
  static const std::set<int> kEmpty;
};

}  // namespace gbpplan
