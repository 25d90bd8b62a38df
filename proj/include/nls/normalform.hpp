#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nls/scattering.hpp"

namespace nls {

// Exponents (m, n) of z^m zbar^n.
using Monomial = std::pair<int, int>;

// Polynomial in (z, zbar) with real nodal field coefficients, truncated above
// max_degree. Products are pointwise in r.
class FieldPoly {
 public:
  FieldPoly(int size, int max_degree) : size_(size), max_degree_(max_degree) {}
  static FieldPoly constant(const VecR& c, int max_degree);
  // cz z + czb zbar
  static FieldPoly linear(const VecR& cz, const VecR& czb, int max_degree);

  int size() const { return size_; }
  int max_degree() const { return max_degree_; }
  const std::map<Monomial, VecR>& terms() const { return c_; }
  VecR coeff(int m, int n) const;
  void add(int m, int n, const VecR& v);

  FieldPoly operator+(const FieldPoly& o) const;
  FieldPoly operator*(const FieldPoly& o) const;
  FieldPoly scaled(double s) const;
  FieldPoly without_degrees_below(int d) const;
  VecC evaluate(cplx z) const;

 private:
  int size_, max_degree_;
  std::map<Monomial, VecR> c_;
};

// Nonlinear vector field O(R^2) of the equation for R = (r, rbar) around the
// ground state, i R_t = H R + O(R^2), with r = z xi_1 + zbar xi_2 + f_1:
//   O = sum R_{m,n} z^m zbar^n + sum z^m zbar^n A_{m,n} f + O(f^2).
struct CoefficientTable {
  int N = 1;
  int stage = 1;  // monomials of total degree 2..stage have been eliminated
  SpacePtr space;
  NonlinearitySpec beta;
  VecR phi, xi;
  std::map<Monomial, VecR> R;         // stacked nodal, 2 <= m + n <= 2N + 1
  std::map<Monomial, MatrixField> A;  // 1 <= m + n <= N
  std::vector<std::vector<Monomial>> eliminated;  // per stage

  VecR source(int m, int n) const;  // zero if absent
  VecC evaluate_R(cplx z, int max_degree) const;
  double tail_norm() const;  // largest |R_{m,n}| over the last dof, relative to the largest entry
};

CoefficientTable taylor_coefficients(const NonlinearitySpec& beta, const VecR& phi, const VecR& xi, SpacePtr space,
                                     int N);
CoefficientTable taylor_coefficients(const NonlinearitySpec& beta, const RadialProfile& p, const DiscreteSpectrum& s,
                                     int N);

// Correction F_{m,n} = (H - (m - n) lambda)^{-1} P_c R_{m,n} at a gap energy.
struct GapCorrection {
  Monomial mono;
  int stage = 0;
  double energy = 0;
  VecR F;
  double residual = 0;    // weak residual of the bordered solve
  double leakage = 0;     // |P_d F| / |F|
  double tail_slope = 0;  // log-linear slope of |F| over the last quarter of the grid
};

struct RecursionResult {
  CoefficientTable table;
  std::vector<GapCorrection> corrections;
};

// Stages 2..N. Stage k removes all monomials with m + n = k from the f
// equation and adds the A F cross terms at higher degree.
RecursionResult fk_recursion(const CoefficientTable& table, const LinearizedOperator& op, const DiscreteSpectrum& s);

struct ResonantData {
  int N = 0;
  VecR source;        // R^{(N)}_{N+1,0}
  VecR source_conj;   // R^{(N)}_{0,N+1}
  MatrixField weight; // A_{0,N}
  double sigma1_residual = 0;  // |R_{0,N+1} + sigma1 R_{N+1,0}| / |R_{N+1,0}|
  std::vector<double> hamiltonian;  // a_m = <R_{m+1,m}, sigma3 xi>, m = 1..N
};

// Fields F_{m,n} with f = h - sum z^m zbar^n F_{m,n} for 2 <= m + n <= N + 1:
// the gap corrections of the recursion plus (H - zeta - i0)^{-1} P_c R_{m,n}
// at degree N + 1 (outgoing at embedded energies).
std::vector<std::pair<Monomial, VecC>> slaved_fields(const RecursionResult& rec, const LinearizedOperator& op,
                                                     const DiscreteSpectrum& s);

ResonantData resonant_data(const RecursionResult& rec, const DiscreteSpectrum& s);

struct ReducedOdeParams {
  double lambda = 0;
  std::vector<double> a;  // a[m-1] multiplies |z|^{2m} z
  double gamma = 0;
  int N = 1;
  double drift = 0;  // omega_hat' = drift |z|^{2N+2}
};

struct ReducedOdeState {
  cplx z;
  double omega_hat = 0;
  double t = 0;
};

struct ReducedOdeOptions {
  double rtol = 1e-9;
  double atol = 1e-14;
  bool damping_only = false;  // drop the rotation and Hamiltonian terms
};

struct Trajectory {
  std::vector<double> t, abs_z, omega_hat;
  std::vector<cplx> z;
};

// i z' - lambda z = sum a_m |z|^{2m} z - i gamma |z|^{2N} z, sampled every dt.
Trajectory reduced_ode_integrate(const ReducedOdeParams& p, const ReducedOdeState& s0, double T, double dt,
                                 const ReducedOdeOptions& opt = {});
// Same, sampled at the given increasing times.
Trajectory reduced_ode_integrate_at(const ReducedOdeParams& p, const ReducedOdeState& s0,
                                    const std::vector<double>& times, const ReducedOdeOptions& opt = {});

// |z(t)| for the damping-only law.
double damping_closed_form(double z0, double gamma, int N, double t);

// Least-squares slope of log|z| against log t over [t_lo, t_hi].
double fit_decay_exponent(const Trajectory& tr, double t_lo, double t_hi);

struct ChangeOfVariables {
  Monomial mono;
  int stage = 0;
  double field_norm = 0;  // |F_{m,n}|
  double p = 0, pbar = 0;  // <F, sigma3 xi>, <F, sigma3 sigma1 xi>: shifts of z, zbar
  double q = 0;            // <F, Phi>: shift of omega
};

struct AuditReport {
  std::vector<ChangeOfVariables> entries;
  double realness_residual = 0;
  int min_degree = 0;
  bool ok = true;
};

AuditReport variable_changes_audit(const RecursionResult& rec, const LinearizedOperator& op,
                                   const DiscreteSpectrum& s);

}  // namespace nls
