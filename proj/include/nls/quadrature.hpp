#pragma once

#include "nls/core.hpp"

namespace nls::quad {

struct Rule {
  VecR x;  // nodes on [-1, 1]
  VecR w;
};

Rule gauss_legendre(int n);
Rule gauss_lobatto(int n);  // n >= 2 points, endpoints included

// P_k(x), P_k'(x), P_k''(x) for k = 0..deg.
void legendre_all(double x, int deg, double* p, double* dp, double* ddp);

}  // namespace nls::quad
