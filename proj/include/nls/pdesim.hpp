#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nls/normalform.hpp"

namespace nls {

using GridPtr = std::shared_ptr<const CartesianGrid2D>;

struct FieldState2D {
  GridPtr grid;
  VecC u;
  double t = 0;
  bool even = true;

  double mass() const;  // int |u|^2 dx
  double even_residual() const { return grid->even_residual(u); }
};

// Absorbing layer: damping rate strength * ((d - (L - width)) / width)^2 for
// d = max(|x|, |y|) within width of the box edge. width = 0 disables it.
struct Sponge {
  double width = 0;
  double strength = 0;
  VecR rate(const CartesianGrid2D& g) const;
};

// Radial nodal data sampled on the grid; zero beyond r_max.
VecR radial_to_grid(const RadialSpace& S, const VecR& nodal, const CartesianGrid2D& g);

// Strang splitting for i u_t + Delta u + beta(|u|^2) u = 0: half kinetic,
// exact pointwise phase rotation, half kinetic. order = 4 composes three
// Strang steps (triple jump). The sponge, if any, is applied once per step.
class SplitStep {
 public:
  SplitStep(GridPtr grid, NonlinearitySpec beta, double dt, Sponge sponge = {}, int order = 2);
  void step(FieldState2D& s) const;
  void advance(FieldState2D& s, int steps) const;
  double dt() const { return dt_; }
  double stiffness_number() const;  // dt * max |k|^2

 private:
  GridPtr grid_;
  NonlinearitySpec beta_;
  double dt_;
  std::vector<VecC> kin_;     // kinetic factors between the phase rotations
  std::vector<double> rot_;   // phase-rotation fractions of dt
  VecR damp_;
  bool sponge_;
};

FieldState2D split_step(const FieldState2D& s, double dt, const NonlinearitySpec& beta, int steps = 1,
                        const Sponge& sponge = {}, int order = 2);

// int |grad u|^2 - B(|u|^2) dx
double nls_energy(const FieldState2D& s, const NonlinearitySpec& beta);
// |u|_{H^1}
double h1_norm(const CartesianGrid2D& g, const VecC& u);

// Matrix splitting for i R_t = H R on the grid, R = (u1, u2): kinetic
// multiplier sigma3 (|k|^2 + omega), pointwise exponential of the potential block.
class LinearFlow2D {
 public:
  LinearFlow2D(const LinearizedOperator& op, GridPtr grid, double dt, Sponge sponge = {});
  void step(VecC& u1, VecC& u2) const;
  const CartesianGrid2D& grid() const { return *grid_; }
  double dt() const { return dt_; }

 private:
  void kinetic(VecC& u1, VecC& u2) const;
  void potential(VecC& u1, VecC& u2) const;

  GridPtr grid_;
  double dt_;
  VecC k1_, k2_;              // half-step kinetic factors
  VecC e11_, e12_, e21_, e22_;  // exp(-i V dt)
  VecR damp_;
  bool sponge_;
};

struct LinearSample {
  double t = 0;
  VecC u1, u2;
};

// e^{-itH} P_c f0 on the grid at the requested times; f0 is stacked radial
// nodal data. project = false skips P_c.
std::vector<LinearSample> evolve_linearized(const LinearizedOperator& op, const DiscreteSpectrum& s, GridPtr grid,
                                            const VecC& f0, const std::vector<double>& times, double dt,
                                            bool project = true, const Sponge& sponge = {});

struct BenchOptions {
  double half_width = 32;
  int points = 128;
  double T = 20;
  double dt = 0.02;
  double s = 1.5;  // weight exponent, > 1
  std::vector<std::pair<double, double>> pairs{{4, 4}, {3, 6}};
  double source_duration = 2;  // sources are sin^2(pi t / d) G(x) on [0, d]
  bool refine = true;          // rerun with twice the points
  Sponge sponge{4.0, 2.0};
};

struct BenchRow {
  std::string shape;  // strichartz, kato, smoothed_source, retarded
  std::string exponents;
  int member = 0;
  double ratio = 0, ratio_refined = 0;
  bool stable = false;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double discrete_leak = 0;  // largest P_c-filtered norm for discrete data
  bool all_stable = false;
};

// Space-time norms of the linearized flow on [0, T] relative to the data
// norms, for each member of the family (stacked radial nodal vectors).
BenchReport strichartz_bench(const LinearizedOperator& op, const DiscreteSpectrum& s, const std::vector<VecR>& family,
                             const BenchOptions& opt = {});

// Profiles near omega0 on demand (Newton polish from the nearest cached one)
// plus the internal mode at omega0, sampled on the grid.
class ModulationFrame {
 public:
  ModulationFrame(const NonlinearitySpec& beta, const RadialProfile& p0, const DiscreteSpectrum& s0, GridPtr grid);

  struct Sample {
    VecR phi, dphi;  // on the grid
    double pair_phi_dphi = 0;
  };
  const Sample& profile(double omega);
  // xi corrected to be sigma3-orthogonal to the generalized kernel at omega,
  // with <xi, sigma3 xi> = 1 on the grid
  std::pair<VecR, VecR> mode(double omega);
  const CartesianGrid2D& grid() const { return *grid_; }
  double omega0() const { return p0_.omega; }
  double lambda() const { return lambda_; }

 private:
  NonlinearitySpec beta_;
  RadialProfile p0_;
  GridPtr grid_;
  VecR xi1_, xi2_;
  double lambda_ = 0;
  std::map<double, Sample> cache_;
  std::map<double, VecR> nodal_;
};

struct ModulationState {
  double omega = 0, gamma = 0;
  cplx z;
  VecC f;  // r-component of the remainder on the grid
  double f_h1 = 0, f_weighted = 0;
  double reconstruction = 0;  // |u - e^{i gamma}(phi + z xi_1 + zbar xi_2 + f)| / |u|
  double constraint = 0;      // largest of the four frame pairings
  int iterations = 0;
};

// Newton on (omega, gamma); the field's running phase is the caller's gamma guess.
ModulationState modulation_decompose(const FieldState2D& s, ModulationFrame& frame, double omega_guess,
                                     double gamma_guess, double weight_s = 2.0);

struct RelaxationConfig {
  NonlinearitySpec beta = NonlinearitySpec::cubic_quintic(1.0, -0.05);
  double omega = 0.3;
  double epsilon = 0.01;
  double half_width = 64;
  int points = 256;
  double dt = 0.025;
  int order = 4;
  double T = 400;
  double cadence = 0.5;
  double sponge_width = 8;  // L/8
  double sponge_strength = 1.0;
  double weight_s = 2.0;
  double profile_rmax = 56;
  double transient = 50;  // verdicts use t >= transient
  double gamma = -1;      // FGR coefficient for the reduced prediction; < 0 computes it
  double constant_tol = 1e-4;  // epsilon = 0: largest deviation accepted as time-step error
};

struct ModulationTrack {
  std::vector<double> t, omega, gamma, f_h1, f_weighted, reconstruction, constraint;
  std::vector<double> h_weighted;  // f plus the slaved fields, weighted norm
  std::vector<cplx> z;
  double mass_drift = 0, even_residual = 0;
};

struct RelaxationResult {
  ModulationTrack track;
  int N = 0;
  double lambda = 0, gamma = 0;
  std::vector<double> envelope_t, envelope, predicted;
  bool envelope_decay = false;
  std::vector<double> cauchy;  // |omega(T) - omega(T/2)| for T = T_end/4, T_end/2, T_end
  bool cauchy_tail = false;
  double omega_drift = 0;  // d omega / dt of the smoothed omega over the second half
  bool weighted_decay = false;
  double lp_ratio = 0;  // |z|_{L^{2N+2}}^{N+1} / epsilon
  bool lp_bounded = false;
  double prediction_factor = 0;  // max ratio of measured to predicted envelope (or inverse)
  bool within_factor_two = false;
  bool constant = false;  // only for epsilon = 0
  double max_deviation = 0;
  double exit_time = -1;  // tube exit
  std::string note;
};

RelaxationResult soliton_relaxation_experiment(const RelaxationConfig& cfg);

}  // namespace nls
