#pragma once

#include <vector>

#include "nls/core.hpp"

// Cylinder functions needed by the free kernels and the radiation boundary
// conditions. Small arguments use power series; large arguments use the
// Laplace-integral form of the Hankel expansion, which is exponentially
// accurate under the trapezoid rule.
namespace nls::special {

inline constexpr double series_crossover = 2.0;

// Macdonald functions, valid for Re w >= 0.
cplx bessel_k0(cplx w);
cplx bessel_k1(cplx w);
// K_0 .. K_mmax by upward recurrence (stable for K).
std::vector<cplx> bessel_k_orders(cplx w, int mmax);

// Hankel functions of the first kind, valid for Im z >= 0 (z != 0).
cplx hankel1_0(cplx z);
cplx hankel1_1(cplx z);
std::vector<cplx> hankel1_orders(cplx z, int mmax);

// J_0 .. J_nmax for real x via Miller's backward recurrence.
std::vector<double> bessel_j_orders(double x, int nmax);
double bessel_j0(double x);
double bessel_j1(double x);

// Log-derivative d/dr log K_m(s r) at r, i.e. s K_m'(s r)/K_m(s r).
cplx log_derivative_k(int m, cplx s, double r);

}  // namespace nls::special
