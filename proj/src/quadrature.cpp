#include "nls/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

namespace nls::quad {

void legendre_all(double x, int deg, double* p, double* dp, double* ddp) {
  p[0] = 1.0;
  dp[0] = 0.0;
  ddp[0] = 0.0;
  if (deg == 0) return;
  p[1] = x;
  dp[1] = 1.0;
  ddp[1] = 0.0;
  for (int k = 1; k < deg; ++k) {
    p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
    dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k];
    ddp[k + 1] = ddp[k - 1] + (2 * k + 1) * dp[k];
  }
}

namespace {

// Newton polish of a root of f with derivative from the Legendre recurrences.
template <class F>
double polish(double x, F&& f) {
  for (int it = 0; it < 8; ++it) {
    double v, d;
    f(x, v, d);
    const double dx = v / d;
    x -= dx;
    if (std::abs(dx) < 1e-16) break;
  }
  return x;
}

}  // namespace

Rule gauss_legendre(int n) {
  require(n >= 1, ErrorKind::invalid_argument, "gauss_legendre: n >= 1");
  MatR J = MatR::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatR> es(J);
  Rule r{es.eigenvalues(), VecR(n)};
  std::vector<double> p(n + 1), dp(n + 1), ddp(n + 1);
  for (int i = 0; i < n; ++i) {
    r.x[i] = polish(r.x[i], [&](double x, double& v, double& d) {
      legendre_all(x, n, p.data(), dp.data(), ddp.data());
      v = p[n];
      d = dp[n];
    });
    legendre_all(r.x[i], n, p.data(), dp.data(), ddp.data());
    r.w[i] = 2.0 / ((1.0 - r.x[i] * r.x[i]) * dp[n] * dp[n]);
  }
  return r;
}

Rule gauss_lobatto(int n) {
  require(n >= 2, ErrorKind::invalid_argument, "gauss_lobatto: n >= 2");
  const int p = n - 1;  // polynomial degree
  Rule r{VecR(n), VecR(n)};
  r.x[0] = -1.0;
  r.x[p] = 1.0;
  if (p >= 2) {
    // interior nodes: zeros of P_p', i.e. Gauss-Jacobi(1,1) of degree p-1
    const int m = p - 1;
    MatR J = MatR::Zero(m, m);
    for (int k = 1; k < m; ++k) {
      const double b = std::sqrt(k * (k + 2.0) / ((2.0 * k + 1.0) * (2.0 * k + 3.0)));
      J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatR> es(J);
    std::vector<double> pv(p + 1), dpv(p + 1), ddpv(p + 1);
    for (int i = 0; i < m; ++i)
      r.x[i + 1] = polish(es.eigenvalues()[i], [&](double x, double& v, double& d) {
        legendre_all(x, p, pv.data(), dpv.data(), ddpv.data());
        v = dpv[p];
        d = ddpv[p];
      });
  }
  std::vector<double> pv(p + 1), dpv(p + 1), ddpv(p + 1);
  for (int i = 0; i < n; ++i) {
    legendre_all(r.x[i], p, pv.data(), dpv.data(), ddpv.data());
    r.w[i] = 2.0 / (p * (p + 1.0) * pv[p] * pv[p]);
  }
  return r;
}

}  // namespace nls::quad
