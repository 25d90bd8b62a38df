#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "nls/kernels.hpp"
#include "nls/linearization.hpp"

namespace nls {

// Fields in this module are complex two-component radial nodal vectors in a
// single angular harmonic m (the radial sector is m = 0).

// H - z in harmonic m, exact exterior condition at r_max: the first component
// continues as K_m(sqrt(omega - z) r), the second as K_m(sqrt(omega + z) r),
// with the roots on the sheet selected by side (outgoing for plus).
class HarmonicSolver {
 public:
  HarmonicSolver(const LinearizedOperator& op, cplx z, Branch side, int m);

  const SpMatC& matrix() const { return K_; }
  VecC solve_weak(const VecC& rhs) const;
  VecC solve(const VecC& g) const;  // nodal g
  // Unit point source at the dof node nearest r0 in component comp: the radial
  // coefficient of delta(x - y) in harmonic m.
  VecC point_source(double r0, int comp, double* r_used = nullptr) const;
  std::array<cplx, 2> exterior_roots() const { return {s1_, s2_}; }

 private:
  const LinearizedOperator* op_;
  int m_;
  cplx z_, s1_, s2_;
  SpMatC K_;
  SpMatC Mb_;
  Eigen::SparseLU<SpMatC> lu_;
};

// (H - z)^{-1} g with the exact exterior condition. For real z on the
// continuum this is the boundary value from side.
VecC resolvent_boundary_value(const LinearizedOperator& op, cplx z, Branch side, const VecC& g, int m = 0);

struct ResolventQuery {
  cplx z;
  Branch side = Branch::plus;
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  int harmonic = 0;
  void validate() const;
};

struct ResolventResult {
  VecC u;
  bool extrapolated = false;
  std::vector<double> increments;  // |u(eps_j) - u(eps_{j+1})|
  double error_estimate = 0;
};

bool on_continuum(const LinearizedOperator& op, cplx z);

// Off the spectrum: one direct solve. On the continuum: solves at
// z +/- i eps over the schedule, polynomial extrapolation to eps = 0.
ResolventResult resolvent_apply(const LinearizedOperator& op, const ResolventQuery& q, const VecC& g);

// u(x, k Sigma) = sum_m (-i)^m U_m(r) e^{i m (theta - theta_Sigma)}, U_{-m} = U_m.
struct DistortedWaveTable {
  double k = 0, omega = 0, energy = 0;
  int m_max = 0;
  bool even_only = false;
  SpacePtr space;
  std::vector<VecC> U;          // index m = 0..m_max; odd entries zero if even_only
  std::vector<VecC> scattered;  // U_m - J_m(k r) e1
  double residual = 0;          // weighted strong residual of (H - k^2 - omega) U_m, max over m

  std::array<cplx, 2> eval(double x, double y, double sigma_angle) const;
};

DistortedWaveTable distorted_wave(const LinearizedOperator& op, double k, int m_max = 12, bool even_only = false);

// Independent route: (1 + R0^+ V) u = e^{-i xi.x} e1 on a Cartesian grid,
// convolution by truncated free kernels, GMRES.
struct FredholmOptions {
  double half_width = 6.0;  // V is treated as supported in [-a, a]^2
  double h = 0.2;
  double tol = 1e-11;
  int max_iter = 400;
};

struct FredholmWave {
  int n = 0;        // points per side
  VecR x;           // coordinates per side
  VecC u1, u2;      // row-major, index i*n + j with x[i], x[j]
  int iterations = 0;
  double residual = 0;
};

FredholmWave distorted_wave_fredholm(const std::function<double(double)>& a, const std::function<double(double)>& b,
                                     double omega, double k, double sigma_angle, const FredholmOptions& opt = {});

// Truncated free-kernel symbols, exposed for tests.
cplx truncated_helmholtz_symbol(double s, double k, double L);
double truncated_yukawa_symbol(double s, double kappa, double L);

// delta(H - E) g for radial g. Zero in the gap, threshold error near +/- omega.
VecC delta_kernel_apply(const LinearizedOperator& op, double energy, const VecC& g);

// Quadrature for int F(E) dE over [lo, hi] on one side of the continuum,
// through E = omega + k^2 (or its mirror), panels graded toward threshold.
struct EnergyRule {
  VecR energy, weight;
};
EnergyRule continuum_rule(double omega, double lo, double hi, int panels = 8, int order = 16);

struct SpectralWindow {
  std::function<double(double)> chi;
  double lo = 0, hi = 0;  // support of chi, inside (omega, infinity)
};

VecC spectral_filter(const LinearizedOperator& op, const SpectralWindow& w, const VecC& f, int panels = 8,
                     int order = 16);

// Same quantity from the Dirichlet box: sum of chi(lambda) over non-bound
// modes with lambda > 0.
VecC spectral_filter_box(const BoxSpectrum& box, const SpectralWindow& w, const VecC& f);

// f - P_d f - int_{omega < |E| < e_max} delta(H - E) f dE, L2 norm.
double completeness_error(const LinearizedOperator& op, const ProjectionSet& P, const VecR& f, double e_max);

// Multiplication by a 2x2 matrix of radial functions (nodal values).
struct MatrixField {
  VecR m11, m12, m21, m22;
  static MatrixField diagonal(const VecR& d1, const VecR& d2);
  VecC apply(const VecC& f) const;
};

struct FgrOptions {
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  double agree_tol = 0.02;     // confident verdict
  double inconsistent = 0.10;  // routes further apart than this are an error
  double gamma_floor = 1e-8;   // |Gamma| must exceed this for the hypothesis
};

struct FgrReport {
  double omega = 0, omega1 = 0;
  double lambda = 0;
  int N = 0;
  double energy = 0;  // (N + 1) lambda
  double gamma_delta = 0, gamma_eps = 0;
  double imag_delta = 0, imag_eps = 0;  // imaginary residues, relative
  double gap = 0;
  bool confident = false;
  int sign = 0;
  std::string verdict;  // "pass", "fail" or "inconclusive"
};

// pi < weight . delta(H - E) P_c source, sigma3 xi >, E = (N + 1) lambda.
FgrReport fgr_coefficient(const LinearizedOperator& op, const DiscreteSpectrum& s, const ProjectionSet& P,
                          const VecC& source, const MatrixField& weight, const FgrOptions& opt = {});

// Operator norm of <r>^{-s} R^+(E) <r>^{-s} on the radial sector, dense.
double weighted_resolvent_norm(const LinearizedOperator& op, double energy, double s);

struct DecayFit {
  std::vector<double> energy, norm;
  double exponent = 0;
};
DecayFit weighted_resolvent_decay(const LinearizedOperator& op, double e_lo, double e_hi, int points, double s);

// R^+(x, r Sigma) e1 against C(r) u(x, k Sigma) on |x| <= rho, per harmonic.
struct FarFieldRow {
  double r = 0;
  double rel_error = 0;
  double abs_error = 0;
};
std::vector<FarFieldRow> far_field_check(const LinearizedOperator& op, double k, const std::vector<double>& radii,
                                         int m_max = 4, double rho = 3.0);

// Strong-form (H - E) residual of a harmonic-m field at quadrature nodes,
// weighted by <r>^{-2} and relative to |u|.
double harmonic_residual(const LinearizedOperator& op, int m, cplx energy, const VecC& u);

}  // namespace nls
