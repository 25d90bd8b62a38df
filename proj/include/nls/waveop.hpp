#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "nls/scattering.hpp"

namespace nls {

enum class WaveDirection { W, Z };

struct WaveOptions {
  double e_max_factor = 64.0;  // energy cutoff in units of omega
  int panels = 8;              // graded panels toward threshold
  int order = 16;
};

struct WaveResult {
  VecC u;
  double tail_bound = 0;  // |f - int_{|E| < e_max} delta(H0 - E) f dE| (W) or its H analogue (Z)
};

// W u = u - int R^-(E) V delta(H0 - E) u dE and
// Z u = P_c u + int R0^-(E) V delta(H - E) P_c u dE, over omega < |E| < e_max.
// Z needs the projections.
WaveResult wave_operator_apply(const LinearizedOperator& op, const VecC& f, WaveDirection dir,
                               const ProjectionSet* P = nullptr, const WaveOptions& opt = {});

// |<r>^{-s} (H W f - W H0 f)| / |<r>^{-s} W H0 f|.
double intertwining_residual(const LinearizedOperator& op, const VecR& f, double s = 1.0,
                             const WaveOptions& opt = {});

// e^{tau A} by a diagonal Pade approximant in partial fractions; A = M^{-1} H
// with Dirichlet data at r_max.
class PadePropagator {
 public:
  PadePropagator(const LinearizedOperator& op, cplx tau, int degree = 6);
  VecC step(const VecC& u) const;

 private:
  int n_;
  cplx r_inf_;
  std::vector<cplx> residues_;
  std::vector<std::unique_ptr<Eigen::SparseLU<SpMatC>>> lu_;
  SpMatC M_;
};

// Pade poles and residues of the (d, d) approximant to e^x: e^x ~ r_inf + sum c_j / (x - p_j).
void pade_exp_partial_fractions(int degree, std::vector<cplx>& poles, std::vector<cplx>& residues, cplx& r_inf);

struct TimeLimitOptions {
  double box_radius = 250.0;
  double dt = 0.2;
  int pade_degree = 6;
  double compare_radius = 12.0;
};

struct TimeLimitRow {
  double T = 0;
  double gap = 0;  // weighted |P_c e^{iTH} e^{-iTH0} f - W f| / |W f| on r < compare_radius
};

std::vector<TimeLimitRow> wave_operator_time_limit(const LinearizedOperator& op, const DiscreteSpectrum& s,
                                                   const std::function<std::array<double, 2>(double)>& f,
                                                   const std::vector<double>& times, const TimeLimitOptions& opt = {},
                                                   const WaveOptions& wopt = {});

// L^p norm on R^2 of a radial two-component field, Euclidean in components.
double lp_norm(const RadialSpace& S, const VecC& u, double p);

struct LpReport {
  double p = 2;
  std::vector<double> ratios, ratios_refined;
  double sup = 0, sup_refined = 0;
  bool stable = false;  // sup within 10% under n -> 2n
};

LpReport lp_bound_probe(const LinearizedOperator& op, double p,
                        const std::vector<std::function<std::array<double, 2>(double)>>& family,
                        const WaveOptions& opt = {});

}  // namespace nls
