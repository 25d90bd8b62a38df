#include "nls/special.hpp"

#include <cmath>

namespace nls::special {

namespace {

// K_0 and K_1 by their ascending series, |w| < series_crossover.
void k01_series(cplx w, cplx& k0, cplx& k1) {
  const cplx q = 0.25 * w * w;
  const cplx lg = std::log(0.5 * w);
  // I_0, I_1 and the digamma-weighted sums.
  cplx term0 = 1.0, term1 = 0.5 * w;
  cplx i0 = 0.0, i1 = 0.0, s0 = 0.0, s1 = 0.0;
  double hk = 0.0;                      // harmonic number H_k
  double psi_k1 = -euler_gamma;         // psi(k+1)
  double psi_k2 = 1.0 - euler_gamma;    // psi(k+2)
  for (int k = 0; k < 60; ++k) {
    i0 += term0;
    i1 += term1;
    s0 += term0 * hk;
    s1 += term1 * (psi_k1 + psi_k2);
    const cplx next0 = term0 * q / double((k + 1) * (k + 1));
    const cplx next1 = term1 * q / double((k + 1) * (k + 2));
    hk += 1.0 / (k + 1);
    psi_k1 += 1.0 / (k + 1);
    psi_k2 += 1.0 / (k + 2);
    term0 = next0;
    term1 = next1;
    if (std::abs(term0) < 1e-18 * std::abs(i0) && std::abs(term1) < 1e-18 * std::abs(i1)) break;
  }
  k0 = -(lg + euler_gamma) * i0 + s0;
  // s1 was accumulated with (w/2)^{2k+1}/(k!(k+1)!) terms; the series needs a
  // prefactor 1/2 on that sum.
  k1 = 1.0 / w + lg * i1 - 0.5 * s1;
}

// Laplace-integral representation, trapezoid in s on the even integrand.
void k01_integral(cplx w, cplx& k0, cplx& k1) {
  const double h = 0.125;
  const int ns = 56;  // s up to 7
  cplx a0 = 0.0, a1 = 0.0;
  const cplx inv2w = 1.0 / (2.0 * w);
  for (int j = 0; j <= ns; ++j) {
    const double s = j * h;
    const double g = std::exp(-s * s) * (j == 0 ? 0.5 : 1.0);
    const cplx t = 1.0 + s * s * inv2w;
    const cplx rt = std::sqrt(t);
    a0 += g / rt;
    a1 += g * s * s * rt;
  }
  a0 *= h;
  a1 *= h;
  const cplx pre = std::sqrt(pi / (2.0 * w)) * std::exp(-w);
  k0 = pre * (2.0 / std::sqrt(pi)) * a0;
  k1 = pre * (4.0 / std::sqrt(pi)) * a1;
}

void k01(cplx w, cplx& k0, cplx& k1) {
  if (w == cplx(0.0)) fail(ErrorKind::singular_point, "Macdonald function at zero argument");
  if (w.real() < -1e-14 * std::abs(w)) fail(ErrorKind::invalid_argument, "Macdonald function needs Re w >= 0");
  if (std::abs(w) < series_crossover)
    k01_series(w, k0, k1);
  else
    k01_integral(w, k0, k1);
}

}  // namespace

cplx bessel_k0(cplx w) {
  cplx a, b;
  k01(w, a, b);
  return a;
}

cplx bessel_k1(cplx w) {
  cplx a, b;
  k01(w, a, b);
  return b;
}

std::vector<cplx> bessel_k_orders(cplx w, int mmax) {
  std::vector<cplx> k(std::max(mmax, 1) + 1);
  k01(w, k[0], k[1]);
  for (int m = 1; m < mmax; ++m) k[m + 1] = k[m - 1] + (2.0 * m) / w * k[m];
  k.resize(mmax + 1);
  return k;
}

// H_nu^(1)(z) = (2/(pi i)) e^{-i nu pi/2} K_nu(-i z).
cplx hankel1_0(cplx z) { return 2.0 / (pi * cplx(0, 1)) * bessel_k0(cplx(0, -1) * z); }

cplx hankel1_1(cplx z) { return -2.0 / pi * bessel_k1(cplx(0, -1) * z); }

std::vector<cplx> hankel1_orders(cplx z, int mmax) {
  const auto k = bessel_k_orders(cplx(0, -1) * z, mmax);
  std::vector<cplx> h(mmax + 1);
  cplx phase = 2.0 / (pi * cplx(0, 1));
  for (int m = 0; m <= mmax; ++m) {
    h[m] = phase * k[m];
    phase *= cplx(0, -1);
  }
  return h;
}

std::vector<double> bessel_j_orders(double x, int nmax) {
  std::vector<double> j(nmax + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const double ax = std::abs(x);
  const int top = nmax > ax ? nmax : int(ax);
  int start = 2 * ((top + 20 + int(std::sqrt(40.0 * (top + 1)))) / 2);
  double jp1 = 0.0, jk = 1e-300, norm = 0.0;
  std::vector<double> tmp(start + 2, 0.0);
  tmp[start] = jk;
  for (int k = start; k > 0; --k) {
    const double jm1 = 2.0 * k / ax * jk - jp1;
    jp1 = jk;
    jk = jm1;
    tmp[k - 1] = jk;
    if (std::abs(jk) > 1e250) {
      for (int i = k - 1; i <= start; ++i) tmp[i] *= 1e-250;
      jk *= 1e-250;
      jp1 *= 1e-250;
    }
  }
  norm = tmp[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * tmp[k];
  for (int n = 0; n <= nmax; ++n) {
    j[n] = tmp[n] / norm;
    if (x < 0 && (n % 2 == 1)) j[n] = -j[n];
  }
  return j;
}

double bessel_j0(double x) { return bessel_j_orders(x, 1)[0]; }
double bessel_j1(double x) { return bessel_j_orders(x, 1)[1]; }

cplx log_derivative_k(int m, cplx s, double r) {
  const auto k = bessel_k_orders(s * r, m + 1);
  // K_m'(w) = -K_{m+1}(w) + (m/w) K_m(w)
  const cplx w = s * r;
  const cplx kp = -k[m + 1] + double(m) / w * k[m];
  return s * kp / k[m];
}

}  // namespace nls::special
