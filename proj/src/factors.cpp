#include "gbpplan/factors.hpp"

#include <cmath>
#include <utility>

namespace gbpplan {

Eigen::Matrix4d state_transition(double dt) {
  Eigen::Matrix4d phi = Eigen::Matrix4d::Identity();
  phi(0, 2) = dt;
  phi(1, 3) = dt;
  return phi;
}

Eigen::Matrix4d dynamics_noise_cov(double dt, double sigma_d) {
  const double q = sigma_d * sigma_d;
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  const double a = dt * dt * dt / 3.0 * q;
  const double b = dt * dt / 2.0 * q;
  const double c = dt * q;
  for (int axis = 0; axis < 2; ++axis) {
    cov(axis, axis) = a;
    cov(axis, axis + 2) = cov(axis + 2, axis) = b;
    cov(axis + 2, axis + 2) = c;
  }
  return cov;
}

Eigen::Matrix4d dynamics_precision(double dt, double sigma_d) {
  if (dt <= 0.0 || sigma_d <= 0.0)
    throw std::invalid_argument("dynamics_precision: dt and sigma_d must be positive");
  const double inv_q = 1.0 / (sigma_d * sigma_d);
  Eigen::Matrix4d lam = Eigen::Matrix4d::Zero();
  const double a = 12.0 / (dt * dt * dt) * inv_q;
  const double b = -6.0 / (dt * dt) * inv_q;
  const double c = 4.0 / dt * inv_q;
  for (int axis = 0; axis < 2; ++axis) {
    lam(axis, axis) = a;
    lam(axis, axis + 2) = lam(axis + 2, axis) = b;
    lam(axis + 2, axis + 2) = c;
  }
  return lam;
}

FactorNode make_pose_factor(FactorId id, VarId var, const RobotState& anchor, double sigma_p) {
  if (sigma_p <= 0.0) throw std::invalid_argument("make_pose_factor: sigma_p must be positive");
  FactorNode f;
  f.id = id;
  f.kind = FactorKind::Pose;
  f.variables = {var};
  f.var_dims = {kStateDim};
  f.z = anchor.stacked();
  f.meas_precision = Mat::Identity(kStateDim, kStateDim) / (sigma_p * sigma_p);
  f.linearization_point = Vec::Zero(kStateDim);
  f.model = [](const Vec& x) {
    Linearization lin;
    lin.h = x;
    lin.jac = Mat::Identity(kStateDim, kStateDim);
    return lin;
  };
  return f;
}

FactorNode make_dynamics_factor(FactorId id, VarId ahead, VarId behind, double dt, double sigma_d) {
  FactorNode f;
  f.id = id;
  f.kind = FactorKind::Dynamics;
  f.variables = {ahead, behind};
  f.var_dims = {kStateDim, kStateDim};
  f.z = Vec::Zero(kStateDim);
  f.meas_precision = dynamics_precision(dt, sigma_d);
  f.linearization_point = Vec::Zero(2 * kStateDim);
  const Eigen::Matrix4d phi = state_transition(dt);
  Mat jac = Mat::Zero(kStateDim, 2 * kStateDim);
  jac.block(0, 0, kStateDim, kStateDim) = phi;
  jac.block(0, kStateDim, kStateDim, kStateDim) = -Eigen::Matrix4d::Identity();
  f.model = [phi, jac](const Vec& x) {
    Linearization lin;
    lin.h = phi * x.head(kStateDim) - x.tail(kStateDim);
    lin.jac = jac;
    return lin;
  };
  return f;
}

FactorNode make_obstacle_factor(FactorId id, VarId var, std::shared_ptr<const SdfGrid> sdf,
                                double robot_radius, double sigma_o, const Eigen::Vector4d& x0) {
  if (!sdf) throw std::invalid_argument("make_obstacle_factor: null sdf");
  if (robot_radius <= 0.0 || sigma_o <= 0.0)
    throw std::invalid_argument("make_obstacle_factor: bad parameters");
  FactorNode f;
  f.id = id;
  f.kind = FactorKind::Obstacle;
  f.variables = {var};
  f.var_dims = {kStateDim};
  f.z = Vec::Zero(1);
  f.meas_precision = Mat::Constant(1, 1, 1.0 / (sigma_o * sigma_o));
  f.linearization_point = x0;
  f.model = [sdf = std::move(sdf), robot_radius](const Vec& x) {
    Linearization lin;
    lin.h = Vec::Zero(1);
    lin.jac = Mat::Zero(1, kStateDim);
    const auto s = sdf->sample(Eigen::Vector2d(x(0), x(1)));
    if (s.distance <= robot_radius) {
      lin.h(0) = 1.0 - s.distance / robot_radius;
      lin.jac(0, 0) = -s.gradient.x() / robot_radius;
      lin.jac(0, 1) = -s.gradient.y() / robot_radius;
    }
    return lin;
  };
  return f;
}

double pair_separation(double radius_a, double radius_b, double epsilon) {
  return radius_a + radius_b + epsilon;
}

void retime_dynamics_factor(FactorNode& f, double dt, double sigma_d) {
  if (f.kind != FactorKind::Dynamics)
    throw std::invalid_argument("retime_dynamics_factor: not a dynamics factor");
  f.meas_precision = dynamics_precision(dt, sigma_d);
  const Eigen::Matrix4d phi = state_transition(dt);
  Mat jac = Mat::Zero(kStateDim, 2 * kStateDim);
  jac.block(0, 0, kStateDim, kStateDim) = phi;
  jac.block(0, kStateDim, kStateDim, kStateDim) = -Eigen::Matrix4d::Identity();
  f.model = [phi, jac](const Vec& x) {
    Linearization lin;
    lin.h = phi * x.head(kStateDim) - x.tail(kStateDim);
    lin.jac = jac;
    return lin;
  };
}

void retime_interrobot_factor(FactorNode& f, double t_k, double sigma_r) {
  if (f.kind != FactorKind::InterRobot)
    throw std::invalid_argument("retime_interrobot_factor: not an inter-robot factor");
  if (t_k <= 0.0) throw std::invalid_argument("retime_interrobot_factor: t_k must be positive");
  const double sig = t_k * sigma_r;
  f.meas_precision = Mat::Constant(1, 1, 1.0 / (sig * sig));
}

FactorNode make_interrobot_factor(FactorId id, VarId var_a, VarId var_b, double t_k,
                                  const FactorParams& params, const Vec& x0) {
  if (t_k <= 0.0) throw std::invalid_argument("make_interrobot_factor: t_k must be positive");
  params.validate();
  FactorNode f;
  f.id = id;
  f.kind = FactorKind::InterRobot;
  f.variables = {var_a, var_b};
  f.var_dims = {kStateDim, kStateDim};
  f.z = Vec::Zero(1);
  const double sig = t_k * params.sigma_r;
  f.meas_precision = Mat::Constant(1, 1, 1.0 / (sig * sig));
  f.linearization_point = x0;
  const double r_star = 2.0 * params.robot_radius + params.epsilon;
  f.model = [r_star](const Vec& x) {
    Linearization lin;
    lin.h = Vec::Zero(1);
    lin.jac = Mat::Zero(1, 2 * kStateDim);
    const Eigen::Vector2d diff(x(0) - x(4), x(1) - x(5));
    const double d = diff.norm();
    if (d > r_star) return lin;
    // Coincident positions have no defined direction; push along +x.
    const Eigen::Vector2d u = d > 0.0 ? Eigen::Vector2d(diff / d) : Eigen::Vector2d(1.0, 0.0);
    lin.h(0) = 1.0 - d / r_star;
    lin.jac(0, 0) = -u.x() / r_star;
    lin.jac(0, 1) = -u.y() / r_star;
    lin.jac(0, 4) = u.x() / r_star;
    lin.jac(0, 5) = u.y() / r_star;
    return lin;
  };
  return f;
}

}  // namespace gbpplan
