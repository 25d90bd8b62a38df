#pragma once

#include <array>

#include "nls/core.hpp"

namespace nls {

enum class Branch { plus, minus };

inline double branch_sign(Branch b) { return b == Branch::plus ? 1.0 : -1.0; }

struct FreeKernelQuery {
  cplx z;
  Branch branch = Branch::plus;
  double r = 1.0;
};

// sqrt(mu) with Re >= 0. For mu on the negative real axis the sign of the
// imaginary part is chosen as the boundary value of mu - i*s*0, s = +1 for
// Branch::plus. This is the decay rate of the Macdonald-function tail.
cplx decay_root(cplx mu, Branch b);

// 2D free resolvent kernel of (-Delta - z)^{-1} at separation r.
cplx free_scalar_kernel(const FreeKernelQuery& q);

// diag((i/4) H0(k r), -(1/2pi) K0(sqrt(k^2 + 2 omega) r)); off-diagonal
// entries are exactly zero.
std::array<cplx, 4> free_matrix_kernel(double k, double omega, double r);

// Coefficient of the rank-one term in the small-z expansion, implemented as
// i/4 - gamma/(2 pi) - log(sqrt(-z)/2)/(2 pi) with the principal root.
cplx threshold_coefficient_c(cplx z);

}  // namespace nls
