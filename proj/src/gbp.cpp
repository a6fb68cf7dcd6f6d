#include "gbpplan/gbp.hpp"

#include <string>

namespace gbpplan {

const CanonicalGaussian& variable_belief_update(VariableNode& v) {
  CanonicalGaussian b = v.prior ? *v.prior : CanonicalGaussian(v.dim);
  for (const auto& [fid, msg] : v.inbox) b.add_information(msg);
  v.belief = b;
  if (auto mu = v.belief.try_mean()) {
    v.mean_hint = *mu;
    v.mean_valid = true;
  }
  return v.belief;
}

CanonicalGaussian variable_to_factor_message(const VariableNode& v, FactorId f) {
  auto it = v.inbox.find(f);
  if (it == v.inbox.end())
    throw std::invalid_argument("variable_to_factor_message: factor not connected");
  return quotient(v.belief, it->second);
}

void relinearize_factor(FactorNode& f, const MeanResolver& resolve) {
  int off = 0;
  for (std::size_t i = 0; i < f.variables.size(); ++i) {
    if (auto mean = resolve(f.variables[i])) {
      if (mean->size() != f.var_dims[i])
        throw std::invalid_argument("relinearize_factor: mean dim mismatch");
      f.linearization_point.segment(off, f.var_dims[i]) = *mean;
    }
    off += f.var_dims[i];
  }
}

const CanonicalGaussian& factor_likelihood(FactorNode& f) {
  const Linearization lin = f.model(f.linearization_point);
  if (!lin.h.allFinite() || !lin.jac.allFinite())
    throw FactorEvalError("factor " + std::to_string(f.id) + ": non-finite measurement");

  const Vec residual = lin.jac * f.linearization_point + f.z - lin.h;
  const auto jt_lam = (lin.jac.transpose() * f.meas_precision).eval();
  Vec eta = jt_lam * residual;
  Mat lam = jt_lam * lin.jac;
  f.likelihood = CanonicalGaussian(std::move(eta), std::move(lam));
  return f.likelihood;
}

const CanonicalGaussian& factor_to_variable_message(FactorNode& f, VarId target, double damping) {
  const int t_off = f.offset_of(target);
  const int t_dim = f.dim_of(target);

  CanonicalGaussian fresh;
  if (f.variables.size() == 1) {
    fresh = f.likelihood;  // unary: the likelihood itself, nothing to marginalize
  } else {
    CanonicalGaussian joint = f.likelihood;
    int off = 0;
    for (std::size_t i = 0; i < f.variables.size(); ++i) {
      const VarId u = f.variables[i];
      if (u != target) joint.add_block(off, f.inbox.at(u));
      off += f.var_dims[i];
    }
    int keep[kMaxVarDim];
    for (int i = 0; i < t_dim; ++i) keep[i] = t_off + i;
    CanonicalGaussian& prev = f.outbox.at(target);
    try {
      fresh = joint.marginalize(std::span<const int>(keep, static_cast<std::size_t>(t_dim)));
    } catch (const SingularMatrixError&) {
      return prev;  // transiently indefinite joint; keep the last valid message
    }
  }

  CanonicalGaussian& prev = f.outbox.at(target);
  prev = fresh.has_psd_precision() ? damped_blend(fresh, prev, damping) : prev;
  return prev;
}

VariableNode& GbpGraph::add_variable(VarId id, int dim) {
  auto [it, inserted] = variables.try_emplace(id, VariableNode(id, dim));
  if (!inserted) throw std::invalid_argument("add_variable: duplicate id");
  return it->second;
}

FactorNode& GbpGraph::add_factor(FactorNode f) {
  if (f.variables.size() != f.var_dims.size() || f.variables.empty())
    throw std::invalid_argument("add_factor: malformed variable list");
  const FactorId id = f.id;
  auto [it, inserted] = factors.try_emplace(id, std::move(f));
  if (!inserted) throw std::invalid_argument("add_factor: duplicate id");
  FactorNode& node = it->second;

  node.likelihood = CanonicalGaussian(node.joint_dim());
  for (std::size_t i = 0; i < node.variables.size(); ++i) {
    const VarId vid = node.variables[i];
    const int dim = node.var_dims[i];
    node.inbox.emplace(vid, CanonicalGaussian(dim));
    node.outbox.emplace(vid, CanonicalGaussian(dim));
    auto vit = variables.find(vid);
    if (vit != variables.end()) {
      if (vit->second.dim != dim) throw std::invalid_argument("add_factor: variable dim mismatch");
      vit->second.inbox.emplace(id, CanonicalGaussian(dim));
    }
  }
  return node;
}

void GbpGraph::remove_factor(FactorId id) {
  auto it = factors.find(id);
  if (it == factors.end()) return;
  for (VarId vid : it->second.variables) {
    auto vit = variables.find(vid);
    if (vit != variables.end()) vit->second.inbox.erase(id);
  }
  factors.erase(it);
}

MeanResolver GbpGraph::local_mean_resolver() const {
  return [this](VarId id) -> std::optional<Vec> {
    auto it = variables.find(id);
    if (it == variables.end() || !it->second.mean_valid) return std::nullopt;
    return it->second.mean_hint;
  };
}

void GbpGraph::iterate(int sweeps, const FactorFilter& filter) {
  const auto pass = [&filter](const FactorNode& f) { return !filter || filter(f); };
  const MeanResolver resolve = local_mean_resolver();

  for (int s = 0; s < sweeps; ++s) {
    for (auto& [vid, v] : variables) {
      for (auto& [fid, slot] : v.inbox) {
        auto fit = factors.find(fid);
        if (fit == factors.end() || !pass(fit->second)) continue;  // externally driven edge
        fit->second.inbox.at(vid) = variable_to_factor_message(v, fid);
      }
    }
    for (auto& [fid, f] : factors) {
      if (!pass(f)) continue;
      relinearize_factor(f, resolve);
      factor_likelihood(f);
      for (VarId vid : f.variables) {
        auto vit = variables.find(vid);
        if (vit == variables.end()) continue;
        vit->second.inbox.at(fid) = factor_to_variable_message(f, vid, damping);
      }
    }
    for (auto& [vid, v] : variables) variable_belief_update(v);
  }
}

}  // namespace gbpplan
