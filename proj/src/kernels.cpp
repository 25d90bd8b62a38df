#include "nls/kernels.hpp"

#include <cmath>

#include "nls/special.hpp"

namespace nls {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::singular_point: return "singular-point";
    case ErrorKind::no_ground_state: return "no-ground-state";
    case ErrorKind::family_break: return "family-break";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::resonance_violation: return "resonance-violation";
    case ErrorKind::threshold: return "threshold";
    case ErrorKind::threshold_or_resonance: return "threshold-or-resonance";
    case ErrorKind::limiting_absorption_failure: return "limiting-absorption-failure";
    case ErrorKind::inconsistent_fgr: return "inconsistent-FGR";
    case ErrorKind::solvability_failure: return "solvability-failure";
    case ErrorKind::unsupported_nonlinearity: return "unsupported-nonlinearity";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::outside_tube: return "outside-tube";
    case ErrorKind::conditioning_failure: return "conditioning-failure";
    case ErrorKind::bookkeeping: return "bookkeeping";
  }
  return "unknown";
}

cplx decay_root(cplx mu, Branch b) {
  if (mu.imag() == 0.0 && mu.real() < 0.0) return cplx(0.0, -branch_sign(b) * std::sqrt(-mu.real()));
  return std::sqrt(mu);
}

cplx free_scalar_kernel(const FreeKernelQuery& q) {
  require(q.r > 0, ErrorKind::singular_point, "free_scalar_kernel: r = 0 is the logarithmic singularity");
  require(q.z != cplx(0.0), ErrorKind::threshold, "free_scalar_kernel: z = 0 is the threshold");
  return special::bessel_k0(decay_root(-q.z, q.branch) * q.r) / (2.0 * pi);
}

std::array<cplx, 4> free_matrix_kernel(double k, double omega, double r) {
  require(r > 0, ErrorKind::singular_point, "free_matrix_kernel: r = 0 is the logarithmic singularity");
  require(k > 0 && omega > 0, ErrorKind::invalid_argument, "free_matrix_kernel: k, omega must be positive");
  const cplx g11 = cplx(0, 0.25) * special::hankel1_0(k * r);
  const cplx g22 = -special::bessel_k0(std::sqrt(k * k + 2 * omega) * r) / (2.0 * pi);
  return {g11, cplx(0), cplx(0), g22};
}

cplx threshold_coefficient_c(cplx z) {
  require(z != cplx(0.0), ErrorKind::invalid_argument, "threshold_coefficient_c: z = 0 is singular");
  return cplx(0, 0.25) - euler_gamma / (2 * pi) - std::log(std::sqrt(-z) / 2.0) / (2 * pi);
}

}  // namespace nls
