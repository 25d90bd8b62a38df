#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nls/groundstate.hpp"

namespace nls {

// Two-component radial fields are nodal vectors of length 2*ndof, stacked.

template <class S>
S pair2(const RadialSpace& sp, const Vec<S>& f, const Vec<S>& g) {
  const Eigen::Index n = sp.ndof();
  const SpMat<S> M = sp.mass().cast<S>();
  return 2.0 * pi * (f.head(n).dot(M * g.head(n)) + f.tail(n).dot(M * g.tail(n)));
}

// Unconjugated quantities go through pair2; this is the L2 norm.
template <class S>
double norm2(const RadialSpace& sp, const Vec<S>& f) {
  const Eigen::Index n = sp.ndof();
  const SpMatR& M = sp.mass();
  double acc = 0;
  for (int c = 0; c < 2; ++c) {
    const Vec<S> h = f.segment(c * n, n);
    acc += std::real(h.dot(M.cast<S>() * h));
  }
  return std::sqrt(2.0 * pi * std::max(acc, 0.0));
}

struct LinearizedOperator {
  double omega = 0;
  SpacePtr space;
  VecR a_q, b_q;  // potentials at quadrature nodes
  bool synthetic = false;
  std::string discretization = "radial-sem, m = 0 sector";
  // Ground-state data; empty for synthetic operators.
  VecR phi, domega;
  double tail_D = 0;  // Robin data of the profile, for strong residuals

  SpMatR A;   // int (u'v' + (omega - a) u v) r dr
  SpMatR Wb;  // int b u v r dr

  int ndof() const { return space->ndof(); }
  bool has_profile() const { return phi.size() > 0; }
  // [[A, -Wb], [Wb, -A]]; weak form of H without boundary terms.
  SpMatR weak_matrix() const;
  SpMatR block_mass() const;
  double anticommutation_residual() const;
  double pseudo_hermiticity_residual() const;
  double boundary_potential() const;  // |a| + |b| at r_max
};

LinearizedOperator assemble_linearization(const RadialProfile& p, const NonlinearitySpec& beta);
LinearizedOperator synthetic_linearization(double omega, const std::function<double(double)>& a,
                                           const std::function<double(double)>& b, SpacePtr sp);

// a = b = 0.
LinearizedOperator free_linearization(double omega, SpacePtr sp);
// Same potentials (and profile data, if any) on another space; zero beyond
// the original r_max.
LinearizedOperator resample_linearization(const LinearizedOperator& op, SpacePtr sp);

// Strong-form H u at the quadrature nodes, two stacked blocks.
VecR apply_H_strong(const LinearizedOperator& op, const VecR& u);
VecC apply_H_strong(const LinearizedOperator& op, const VecC& u);
double quad_norm(const LinearizedOperator& op, const VecR& uq);

// Eigen-decomposition of the Dirichlet box operator through the symmetric
// square-root form of (L + b)(L - b). Continuum and bound modes together.
class BoxSpectrum {
 public:
  explicit BoxSpectrum(const LinearizedOperator& op);

  int size() const { return int(mu_.size()); }
  const VecR& mu() const { return mu_; }  // lambda^2, ascending
  double lambda(int j) const { return std::sqrt(std::max(mu_[j], 0.0)); }
  // Right eigenvector for +lambda_j (sign = +1) or -lambda_j (sign = -1), stacked nodal.
  VecR mode(int j, int sign) const;
  double localization(int j) const;  // mass fraction inside r < r_max / 2

  // sum over modes with mu_j > mu_cut and keep(j): g(+/-lambda_j) * projection.
  VecC apply(const VecC& f, const std::function<cplx(double)>& g, const std::function<bool(int)>& keep = nullptr,
             double mu_cut = -1) const;
  VecR apply_real(const VecR& f, const std::function<double(double)>& g, const std::function<bool(int)>& keep = nullptr,
                  double mu_cut = -1) const;

  double zero_cut() const { return zero_cut_; }
  bool is_bound(int j) const;  // localized with mu in (zero_cut, omega^2)
  const LinearizedOperator& op() const { return op_; }

 private:
  void to_hat(const VecC& f, VecC& sh, VecC& dh) const;
  VecC from_hat(const VecC& sh, const VecC& dh) const;

  LinearizedOperator op_;
  int n_;            // interior dofs
  MatR Lc_;          // Cholesky factor of interior M
  MatR P1_, P2_;     // S^{1/2} Q and S^{-1/2} Q
  MatR Sm_, Dm_;     // L^{-T} P1, L^{-T} P2: nodal s and d parts of each mode
  VecR mu_;
  VecR loc_;
  double zero_cut_ = 0;
};

struct DiscreteSpectrum {
  double omega = 0;
  bool has_mode = false;
  double lambda = 0;
  VecR xi;  // stacked nodal, <xi, sigma3 xi> = 1
  int N = 0;
  bool h7_pass = false;
  bool h9_pass = true;
  bool unstable = false;
  int neg_eigs = 0;  // negative lambda^2 values (exponential instability)
  std::vector<double> extra;  // other localized eigenvalues in (0, omega)
  std::string status;         // "ok" or "no-internal-mode"

  // Jordan block at 0
  bool has_jordan = false;
  VecR phase;    // sigma3 Phi
  VecR scaling;  // d Phi / d omega
  double jordan_constant = 0;  // H scaling = c * phase

  // diagnostics
  double normalization = 0;
  double eig_residual = 0;
  double companion_residual = 0;
  double phase_residual = 0;
  double scaling_residual = 0;
};

DiscreteSpectrum discrete_spectrum(const LinearizedOperator& op, const BoxSpectrum& box);
DiscreteSpectrum discrete_spectrum(const LinearizedOperator& op);

// Unique N with N lambda < omega < (N + 1) lambda.
int check_h7(double lambda, double omega, double tol = 1e-6);

class ProjectionSet {
 public:
  ProjectionSet(const LinearizedOperator& op, const DiscreteSpectrum& s, const BoxSpectrum* box = nullptr);

  VecR Pd(const VecR& f) const;
  VecR Pc(const VecR& f) const { return f - Pd(f); }
  VecR Plambda(const VecR& f, int sign) const;  // projection on ker(H -/+ lambda)
  VecR Pzero(const VecR& f) const;              // generalized kernel
  VecR Pplus(const VecR& f) const;              // requires box
  VecR Pminus(const VecR& f) const;
  double gram_condition() const { return gram_cond_; }

 private:
  SpacePtr space_;
  const BoxSpectrum* box_;
  std::vector<VecR> right_, left_;
  MatR gram_inv_;
  int zero_begin_ = 0;
  double gram_cond_ = 1;
};

}  // namespace nls
