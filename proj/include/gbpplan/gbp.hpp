#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gbpplan/gaussian.hpp"

namespace gbpplan {

using VarId = std::int64_t;
using FactorId = std::int64_t;

enum class FactorKind : std::uint8_t { Pose = 0, Dynamics = 1, Obstacle = 2, InterRobot = 3, Generic = 4 };

struct FactorEvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Measurement h and Jacobian J evaluated at a stacked linearization point.
struct Linearization {
  Vec h;
  Mat jac;  // m x joint_dim
};
using MeasurementFn = std::function<Linearization(const Vec& x0)>;

class VariableNode {
 public:
  VariableNode(VarId id_in, int dim_in) : id(id_in), dim(dim_in), belief(dim_in) {}

  VarId id;
  int dim;
  CanonicalGaussian belief;
  std::map<FactorId, CanonicalGaussian> inbox;  // exactly one slot per connected factor
  std::optional<CanonicalGaussian> prior;

  // Latest usable mean: the belief mean once the belief is positive definite,
  // otherwise the initial hint (e.g. a straight-line seed). Factors
  // relinearize at this value, so a variable with no information yet keeps
  // its previous linearization point.
  Vec mean_hint;
  bool mean_valid = false;

  void set_initial_mean(const Vec& m) {
    mean_hint = m;
    mean_valid = true;
  }
};

class FactorNode {
 public:
  FactorId id = 0;
  FactorKind kind = FactorKind::Generic;
  std::vector<VarId> variables;  // fixed order; defines the stacked layout
  std::vector<int> var_dims;
  Vec z;
  Mat meas_precision;
  Vec linearization_point;  // stacked X0
  MeasurementFn model;

  std::map<VarId, CanonicalGaussian> inbox;   // latest variable -> factor messages
  std::map<VarId, CanonicalGaussian> outbox;  // last sent factor -> variable messages
  CanonicalGaussian likelihood;               // cached from the last relinearization

  int joint_dim() const {
    int d = 0;
    for (int v : var_dims) d += v;
    return d;
  }

  int offset_of(VarId v) const {
    int off = 0;
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (variables[i] == v) return off;
      off += var_dims[i];
    }
    throw std::invalid_argument("FactorNode: variable not adjacent");
  }

  int dim_of(VarId v) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == v) return var_dims[i];
    throw std::invalid_argument("FactorNode: variable not adjacent");
  }
};

/// Resolves a variable id to its current mean, or nullopt to keep the
/// existing linearization for that block. Lets the same relinearization code
/// serve both in-graph variables and peers known only through messages.
using MeanResolver = std::function<std::optional<Vec>(VarId)>;

/// belief = prior * product of all inbox messages (information sums, fixed
/// ascending-factor-id order). Refreshes the node's mean hint when possible.
const CanonicalGaussian& variable_belief_update(VariableNode& v);

/// Leave-one-out message, subtraction form: belief minus inbox[f].
CanonicalGaussian variable_to_factor_message(const VariableNode& v, FactorId f);

/// Writes resolved means into the factor's stacked linearization point.
void relinearize_factor(FactorNode& f, const MeanResolver& resolve);

/// First-order likelihood at the current linearization point:
///   eta = J' lam_s (J X0 + z - h(X0)),  lam = J' lam_s J.
/// Stores the result on the node and returns it.
const CanonicalGaussian& factor_likelihood(FactorNode& f);

/// Joint = likelihood + other variables' inbound messages on their diagonal
/// blocks; marginalize onto the target block; damp against the previous
/// outgoing message. A non-PSD fresh message is discarded in favour of the
/// previous one (validity guard). Updates the outbox.
const CanonicalGaussian& factor_to_variable_message(FactorNode& f, VarId target, double damping);

class GbpGraph {
 public:
  double damping = 0.4;

  std::map<VarId, VariableNode> variables;
  std::map<FactorId, FactorNode> factors;

  VariableNode& add_variable(VarId id, int dim);

  /// Inserts the factor and wires zero-information inbox/outbox slots, plus
  /// an inbox slot on every adjacent variable that exists in this graph.
  /// Adjacent variables absent from the graph are allowed; their edges are
  /// driven externally (messages arriving over a transport).
  FactorNode& add_factor(FactorNode f);

  /// Removes a factor and its slots from local variables.
  void remove_factor(FactorId id);

  using FactorFilter = std::function<bool(const FactorNode&)>;

  /// Synchronous sweeps restricted to factors passing `filter` (all factors
  /// if empty): variables send to those factors, the factors relinearize at
  /// current means and reply, then every variable updates its belief. All
  /// iteration is in ascending id order, so results are deterministic.
  void iterate(int sweeps, const FactorFilter& filter = {});

  MeanResolver local_mean_resolver() const;
};

}  // namespace gbpplan
