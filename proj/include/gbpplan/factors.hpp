#pragma once

#include <Eigen/Core>

#include <memory>
#include <stdexcept>

#include "gbpplan/gbp.hpp"
#include "gbpplan/sdf.hpp"

namespace gbpplan {

/// Planar robot state [x, y, xdot, ydot] in meters and meters/second.
struct RobotState {
  Eigen::Vector2d pos{0.0, 0.0};
  Eigen::Vector2d vel{0.0, 0.0};

  Eigen::Vector4d stacked() const {
    Eigen::Vector4d s;
    s << pos.x(), pos.y(), vel.x(), vel.y();
    return s;
  }
  static RobotState from_stacked(const Eigen::Vector4d& s) {
    return RobotState{{s(0), s(1)}, {s(2), s(3)}};
  }
  bool finite() const { return pos.allFinite() && vel.allFinite(); }
};

inline constexpr int kStateDim = 4;

struct FactorParams {
  double sigma_p = 1e-15;     // pose anchor strength (meters)
  double sigma_d = 1.0;       // dynamics noise scale
  double sigma_o = 0.005;     // obstacle strength
  double sigma_r = 0.005;     // inter-robot strength (scaled by t_k)
  double robot_radius = 2.0;  // meters
  double epsilon = 0.5;       // extra safety margin in r* (meters)
  double comm_radius = 50.0;  // meters

  void validate() const {
    if (sigma_p <= 0 || sigma_d <= 0 || sigma_o <= 0 || sigma_r <= 0)
      throw std::invalid_argument("FactorParams: sigmas must be positive");
    if (robot_radius <= 0 || epsilon < 0 || comm_radius <= 0)
      throw std::invalid_argument("FactorParams: bad geometry parameters");
  }
};

// ---- node id scheme -------------------------------------------------------
// Variable ids pack (robot, state index); factor ids additionally carry the
// factor kind in the top bits so ascending id order is kind-major and stable.
// Ids are globally unique across robots, which keeps cross-robot message
// routing and deterministic iteration trivial.

inline constexpr std::int64_t kMaxRobots = 1 << 20;
inline constexpr std::int64_t kMaxStates = 1 << 16;

inline VarId make_var_id(int robot, int k) {
  return (static_cast<std::int64_t>(robot) << 16) | static_cast<std::int64_t>(k);
}
inline int var_robot(VarId id) { return static_cast<int>(id >> 16); }
inline int var_state(VarId id) { return static_cast<int>(id & 0xffff); }

inline FactorId make_factor_id(FactorKind kind, int owner, int peer, int k) {
  return (static_cast<std::int64_t>(static_cast<int>(kind) + 1) << 60) |
         (static_cast<std::int64_t>(owner) << 36) | (static_cast<std::int64_t>(peer) << 16) |
         static_cast<std::int64_t>(k);
}
inline FactorKind factor_id_kind(FactorId id) {
  return static_cast<FactorKind>(static_cast<int>(id >> 60) - 1);
}
inline int factor_id_owner(FactorId id) { return static_cast<int>((id >> 36) & (kMaxRobots - 1)); }
inline int factor_id_peer(FactorId id) { return static_cast<int>((id >> 16) & (kMaxRobots - 1)); }
inline int factor_id_state(FactorId id) { return static_cast<int>(id & (kMaxStates - 1)); }

// ---- closed forms ---------------------------------------------------------

/// Constant-velocity transition over dt: pos += dt * vel.
Eigen::Matrix4d state_transition(double dt);

/// Process noise covariance of the constant-velocity model over dt
/// (the matrix whose inverse is the dynamics measurement precision):
///   [[dt^3/3 Q, dt^2/2 Q], [dt^2/2 Q, dt Q]],  Q = sigma_d^2 I2.
Eigen::Matrix4d dynamics_noise_cov(double dt, double sigma_d);

/// Closed-form inverse of dynamics_noise_cov; per axis
///   [[12/dt^3, -6/dt^2], [-6/dt^2, 4/dt]] / sigma_d^2.
Eigen::Matrix4d dynamics_precision(double dt, double sigma_d);

// ---- factor builders ------------------------------------------------------

/// Unary anchor h(x) = x with precision sigma_p^-2 I on all four dims.
FactorNode make_pose_factor(FactorId id, VarId var, const RobotState& anchor, double sigma_p);

/// Binary constant-velocity factor h(x_a, x_b) = Phi(dt) x_a - x_b, z = 0.
FactorNode make_dynamics_factor(FactorId id, VarId ahead, VarId behind, double dt, double sigma_d);

/// Unary scalar obstacle factor. h = 1 - d/r_R when the sampled signed
/// distance d is within the robot radius, else 0 with a zero Jacobian.
FactorNode make_obstacle_factor(FactorId id, VarId var, std::shared_ptr<const SdfGrid> sdf,
                                double robot_radius, double sigma_o,
                                const Eigen::Vector4d& x0);

/// Pairwise scalar separation factor between two robots' states at the same
/// planned timestep t_k. h = 1 - d/r* inside r* = 2 robot_radius + epsilon,
/// else 0. Measurement precision is (t_k sigma_r)^-2, so constraints on the
/// near future bind harder than distant ones. Requires t_k > 0.
FactorNode make_interrobot_factor(FactorId id, VarId var_a, VarId var_b, double t_k,
                                  const FactorParams& params, const Vec& x0);

/// Safe separation used by the mirrored pair between robots with (possibly
/// different) radii: r* = r_a + r_b + epsilon, identical on both sides.
double pair_separation(double radius_a, double radius_b, double epsilon);

// ---- schedule retiming ----------------------------------------------------
// When the remaining lookahead contracts, existing factors keep their message
// state and only the time-dependent pieces are swapped in place.

/// Rebuilds a dynamics factor's precision and model for a new gap.
void retime_dynamics_factor(FactorNode& f, double dt, double sigma_d);

/// Updates an inter-robot factor's precision for a new lookahead t_k.
void retime_interrobot_factor(FactorNode& f, double t_k, double sigma_r);

}  // namespace gbpplan
