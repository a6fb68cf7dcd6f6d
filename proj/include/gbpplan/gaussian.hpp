#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace gbpplan {

// Storage caps for the dense small-matrix representation: a variable block
// never exceeds 8 scalar dims and a factor joint never exceeds 16, so every
// vector/matrix lives on the stack and the hot loops never touch the heap.
inline constexpr int kMaxVarDim = 8;
inline constexpr int kMaxJointDim = 16;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxJointDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxJointDim,
                          kMaxJointDim>;

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string condition_diagnostics(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "eigenvalues in [" << es.eigenvalues().minCoeff() << ", " << es.eigenvalues().maxCoeff()
     << "], dim " << m.rows();
  return os.str();
}

}  // namespace detail

/// Gaussian in canonical (information) form: eta = lam * mu, lam = cov^-1.
/// The zero-information element (eta = 0, lam = 0) is a legal value and acts
/// as the identity under product. lam is kept symmetric by construction.
class CanonicalGaussian {
 public:
  CanonicalGaussian() = default;  // dim 0, only useful as a placeholder

  explicit CanonicalGaussian(int dim) : eta_(Vec::Zero(dim)), lam_(Mat::Zero(dim, dim)) {
    if (dim < 1 || dim > kMaxJointDim) throw std::invalid_argument("CanonicalGaussian: bad dim");
  }

  CanonicalGaussian(Vec eta, Mat lam) : eta_(std::move(eta)), lam_(std::move(lam)) {
    if (lam_.rows() != lam_.cols() || lam_.rows() != eta_.size())
      throw std::invalid_argument("CanonicalGaussian: eta/lam shape mismatch");
    symmetrize();
  }

  static CanonicalGaussian zero_information(int dim) { return CanonicalGaussian(dim); }

  int dim() const { return static_cast<int>(eta_.size()); }
  const Vec& eta() const { return eta_; }
  const Mat& lam() const { return lam_; }

  bool is_zero() const { return eta_.isZero(0.0) && lam_.isZero(0.0); }

  void symmetrize() { lam_ = ((lam_ + lam_.transpose()) * 0.5).eval(); }

  /// Information-form product: eta and lam add. Identity for zero information.
  void add_information(const CanonicalGaussian& other) {
    check_same_dim(other.dim());
    eta_ += other.eta_;
    lam_ += other.lam_;
  }

  /// Adds a lower-dimensional Gaussian onto the diagonal block at `offset`.
  void add_block(int offset, const CanonicalGaussian& sub) {
    const int d = sub.dim();
    if (offset < 0 || offset + d > dim())
      throw std::invalid_argument("CanonicalGaussian: block out of range");
    eta_.segment(offset, d) += sub.eta_;
    lam_.block(offset, offset, d, d) += sub.lam_;
  }

  /// Marginal over the (sorted, unique) index set `keep` by Schur complement:
  ///   eta_a' = eta_a - lam_ab lam_bb^-1 eta_b
  ///   lam_a' = lam_aa - lam_ab lam_bb^-1 lam_ba
  /// A singular eliminated block gets one diagonal jitter retry
  /// (1e-9 * trace/dim); if that block is still not factorizable the call
  /// throws with condition diagnostics. A fully decoupled block (lam_ab = 0)
  /// marginalizes exactly to (eta_a, lam_aa) with no solve.
  CanonicalGaussian marginalize(std::span<const int> keep) const {
    const int n = dim();
    const int na = static_cast<int>(keep.size());
    if (na == 0 || na > n) throw std::invalid_argument("marginalize: bad keep set");
    for (int i = 0; i < na; ++i) {
      if (keep[i] < 0 || keep[i] >= n || (i > 0 && keep[i] <= keep[i - 1]))
        throw std::invalid_argument("marginalize: keep indices must be sorted, unique, in range");
    }
    if (na == n) return *this;

    const int nb = n - na;
    // Complement of keep, ascending.
    int elim[kMaxJointDim];
    {
      int e = 0, k = 0;
      for (int i = 0; i < n; ++i) {
        if (k < na && keep[k] == i) {
          ++k;
        } else {
          elim[e++] = i;
        }
      }
    }

    Vec eta_a(na), eta_b(nb);
    Mat lam_aa(na, na), lam_ab(na, nb), lam_bb(nb, nb);
    for (int i = 0; i < na; ++i) {
      eta_a(i) = eta_(keep[i]);
      for (int j = 0; j < na; ++j) lam_aa(i, j) = lam_(keep[i], keep[j]);
      for (int j = 0; j < nb; ++j) lam_ab(i, j) = lam_(keep[i], elim[j]);
    }
    for (int i = 0; i < nb; ++i) {
      eta_b(i) = eta_(elim[i]);
      for (int j = 0; j < nb; ++j) lam_bb(i, j) = lam_(elim[i], elim[j]);
    }

    if (lam_ab.cwiseAbs().maxCoeff() == 0.0) return CanonicalGaussian(eta_a, lam_aa);

    Eigen::LLT<Mat> llt(lam_bb);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-9 * lam_bb.trace() / nb;
      if (jitter > 0.0) {
        lam_bb.diagonal().array() += jitter;
        llt.compute(lam_bb);
      }
      if (llt.info() != Eigen::Success)
        throw SingularMatrixError("marginalize: eliminated block not factorizable after jitter; " +
                                  detail::condition_diagnostics(lam_bb));
    }

    Mat rhs(nb, na + 1);
    rhs.leftCols(na) = lam_ab.transpose();
    rhs.col(na) = eta_b;
    const Mat sol = llt.solve(rhs);

    Mat lam_new = lam_aa - lam_ab * sol.leftCols(na);
    Vec eta_new = eta_a - lam_ab * sol.col(na);
    return CanonicalGaussian(std::move(eta_new), std::move(lam_new));
  }

  CanonicalGaussian marginalize(std::initializer_list<int> keep) const {
    return marginalize(std::span<const int>(keep.begin(), keep.size()));
  }

  /// Mean mu = lam^-1 eta. Requires positive definite lam.
  Vec mean() const {
    Eigen::LLT<Mat> llt(lam_);
    if (llt.info() != Eigen::Success)
      throw SingularMatrixError("mean: precision not positive definite; " +
                                detail::condition_diagnostics(lam_));
    return llt.solve(eta_);
  }

  /// Mean if lam is positive definite, nullopt otherwise (never throws).
  std::optional<Vec> try_mean() const {
    if (lam_.isZero(0.0)) return std::nullopt;
    Eigen::LLT<Mat> llt(lam_);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Vec mu = llt.solve(eta_);
    if (!mu.allFinite()) return std::nullopt;
    return mu;
  }

  /// Positive semidefinite check used as the message-validity guard.
  /// Tolerates roundoff-scale negative curvature relative to the largest pivot.
  bool has_psd_precision(double tol = 1e-9) const {
    if (lam_.isZero(0.0)) return true;
    Eigen::LDLT<Mat> ldlt(lam_);
    if (ldlt.info() != Eigen::Success) return false;
    const auto& d = ldlt.vectorD();
    const double scale = std::max(1.0, d.maxCoeff());
    return d.minCoeff() >= -tol * scale;
  }

 private:
  void check_same_dim(int other) const {
    if (other != dim()) throw std::invalid_argument("CanonicalGaussian: dim mismatch");
  }

  Vec eta_;
  Mat lam_;
};

inline CanonicalGaussian product(const CanonicalGaussian& a, const CanonicalGaussian& b) {
  CanonicalGaussian out = a;
  out.add_information(b);
  return out;
}

/// Gaussian quotient in information form (belief minus one message); the
/// leave-one-out building block. Re-symmetrizes to absorb subtraction noise.
inline CanonicalGaussian quotient(const CanonicalGaussian& num, const CanonicalGaussian& den) {
  if (num.dim() != den.dim()) throw std::invalid_argument("quotient: dim mismatch");
  Vec eta = num.eta() - den.eta();
  Mat lam = num.lam() - den.lam();
  return CanonicalGaussian(std::move(eta), std::move(lam));  // ctor symmetrizes
}

/// Damped blend in information form: (1-beta)*fresh + beta*previous.
inline CanonicalGaussian damped_blend(const CanonicalGaussian& fresh,
                                      const CanonicalGaussian& previous, double beta) {
  if (fresh.dim() != previous.dim()) throw std::invalid_argument("damped_blend: dim mismatch");
  if (beta == 0.0) return fresh;
  Vec eta = (1.0 - beta) * fresh.eta() + beta * previous.eta();
  Mat lam = (1.0 - beta) * fresh.lam() + beta * previous.lam();
  return CanonicalGaussian(std::move(eta), std::move(lam));
}

}  // namespace gbpplan
