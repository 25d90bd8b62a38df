#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nls/radial_space.hpp"

namespace nls {

enum class NonlinearityKind { cubic, cubic_quintic, user_polynomial };

// beta(s) = sum_k coeffs[k] s^k with s = |u|^2. coeffs[0] must vanish.
struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::cubic;
  std::vector<double> coeffs{0.0, 1.0};
  double p0 = 3.0;

  static NonlinearitySpec cubic(double c1 = 1.0);
  static NonlinearitySpec cubic_quintic(double c1, double c2);
  static NonlinearitySpec polynomial(std::vector<double> coeffs);
  static NonlinearitySpec zero();

  int degree() const { return int(coeffs.size()) - 1; }
  bool is_zero() const;
  void validate() const;

  double beta(double s) const;
  double dbeta(double s) const;
  double B(double s) const;  // antiderivative, B(0) = 0

  template <class D>
  VecR beta_of(const Eigen::MatrixBase<D>& s) const {
    VecR out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = beta(s[i]);
    return out;
  }
  template <class D>
  VecR dbeta_of(const Eigen::MatrixBase<D>& s) const {
    VecR out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = dbeta(s[i]);
    return out;
  }
  std::string describe() const;
};

struct RadialProfile {
  double omega = 0;
  SpacePtr space;
  VecR phi;     // nodal values
  VecR dphi_q;  // d/dr at the quadrature nodes
  VecR domega;  // d phi / d omega, nodal
  double mass = 0;
  double phi0 = 0;
  double residual = 0;         // weighted max of the strong ODE residual
  double dphi_condition = 0;   // condition estimate of the L+ solve
  std::vector<std::string> warnings;

  VecR phi_quad() const { return space->interp() * phi; }
  double eval(double r) const { return space->eval(phi, r); }
};

struct SolitonFamily {
  NonlinearitySpec beta;
  std::vector<RadialProfile> members;
  std::vector<double> omega() const;
  std::vector<double> mass() const;
};

struct GroundStateOptions {
  double r_max = 24.0;
  int n = 768;
  int degree = default_degree;
  double shoot_max = 1e3;  // upper end of the phi(0) scan
  double bisect_tol = 1e-13;
};

// Exterior log-derivative of the decaying tail K_0(sqrt(omega) r) at r_max.
double tail_log_derivative(double omega, double r_max);

// K + omega M + Robin tail term; the shared "-Delta + omega" block for the ground state.
SpMatR helmholtz_block(const RadialSpace& sp, double omega);

RadialProfile solve_ground_state(const NonlinearitySpec& beta, double omega, const GroundStateOptions& opt = {});

// Newton polish from an initial nodal guess. Throws no_ground_state on
// divergence.
RadialProfile polish_ground_state(const NonlinearitySpec& beta, double omega, SpacePtr sp, VecR guess);

// Strong ODE residual phi'' + phi'/r - omega phi + beta(phi^2) phi at the quadrature nodes.
VecR ode_residual(const RadialProfile& p, const NonlinearitySpec& beta);

// Pohozaev balance int (omega phi^2 - B(phi^2)) dx relative to int omega phi^2 dx.
double pohozaev_residual(const RadialProfile& p, const NonlinearitySpec& beta);

// Slope of log(sqrt(r) phi) over the last quarter of the grid.
double tail_slope(const RadialProfile& p);

// Largest value of |L+ dphi/domega + phi| relative to max phi.
double jordan_seed_residual(const RadialProfile& p, const NonlinearitySpec& beta);

SolitonFamily continue_family(const NonlinearitySpec& beta, double omega_lo, double omega_hi, int steps,
                              const GroundStateOptions& opt = {});

enum class H4Verdict { pass, fail, degenerate };
const char* to_string(H4Verdict v);

struct H4Row {
  double omega;
  double slope_fd;      // finite differences of the mass curve
  double slope_pair;    // 2 <phi, d phi/d omega>
  H4Verdict verdict;
};

std::vector<H4Row> check_h4(const SolitonFamily& f, double degenerate_tol = 1e-6);

struct LplusCount {
  int negative = 0;
  double smallest = 0;
};

// L+ = -Delta + omega - beta(phi^2) - 2 beta'(phi^2) phi^2 on radial functions.
SpMatR lplus_matrix(const RadialProfile& p, const NonlinearitySpec& beta);
LplusCount count_negative_eigs_Lplus(const RadialProfile& p, const NonlinearitySpec& beta);

// Zero profile on a space; used for the beta = 0 formal case and for free operators.
RadialProfile zero_profile(double omega, SpacePtr sp);

// columns: omega, mass, dmass_domega, phi0, neg_eigs_Lplus
void write_family_csv(std::ostream& os, const SolitonFamily& f);

}  // namespace nls
