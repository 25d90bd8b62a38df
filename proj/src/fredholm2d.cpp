// Cartesian Lippmann-Schwinger solve for distorted plane waves. The free
// resolvent is applied by FFT with kernels truncated beyond the diameter of
// the computational square, so the periodic convolution is exact for data
// supported in the square.

#include <Eigen/Core>
#include <unsupported/Eigen/IterativeSolvers>
#include <cmath>
#include <memory>

#include "nls/grids.hpp"
#include "nls/scattering.hpp"
#include "nls/special.hpp"

namespace nls {
namespace {

struct FredholmData {
  int n = 0;       // points per side in the square
  int nb = 0;      // FFT box
  int j0 = 0;      // offset of the square inside the box
  VecR x;
  VecR a, b;       // potentials on the square, row-major
  VecC g1, g2;     // truncated symbols on the box
  std::unique_ptr<CartesianGrid2D> box;

  Eigen::Index size() const { return 2 * Eigen::Index(n) * n; }

  VecC convolve(const VecC& rho, const VecC& sym) const {
    VecC big = VecC::Zero(box->size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) big[Eigen::Index(i + j0) * nb + (j + j0)] = rho[Eigen::Index(i) * n + j];
    box->forward(big);
    big = big.cwiseProduct(sym);
    box->backward(big);
    VecC out(Eigen::Index(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[Eigen::Index(i) * n + j] = big[Eigen::Index(i + j0) * nb + (j + j0)];
    return out;
  }

  // u + R0^+ V u
  VecC apply(const VecC& u) const {
    const Eigen::Index m = Eigen::Index(n) * n;
    const VecC u1 = u.head(m), u2 = u.tail(m);
    const VecC v1 = -(a.cast<cplx>().cwiseProduct(u1) + b.cast<cplx>().cwiseProduct(u2));
    const VecC v2 = b.cast<cplx>().cwiseProduct(u1) + a.cast<cplx>().cwiseProduct(u2);
    VecC out(2 * m);
    out.head(m) = u1 + convolve(v1, g1);
    out.tail(m) = u2 + convolve(v2, g2);
    return out;
  }
};

}  // namespace
}  // namespace nls

// Matrix-free wrapper so Eigen's GMRES can drive FredholmData::apply.
class FredholmOperator;
namespace Eigen::internal {
template <>
struct traits<FredholmOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<std::complex<double>>> {};
}  // namespace Eigen::internal

class FredholmOperator : public Eigen::EigenBase<FredholmOperator> {
 public:
  using Scalar = std::complex<double>;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  explicit FredholmOperator(const nls::FredholmData& d) : d_(&d) {}
  Eigen::Index rows() const { return d_->size(); }
  Eigen::Index cols() const { return d_->size(); }
  template <class Rhs>
  Eigen::Product<FredholmOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<FredholmOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }
  const nls::FredholmData& data() const { return *d_; }

 private:
  const nls::FredholmData* d_;
};

namespace Eigen::internal {
template <class Rhs>
struct generic_product_impl<FredholmOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<FredholmOperator, Rhs, generic_product_impl<FredholmOperator, Rhs>> {
  using Scalar = typename Product<FredholmOperator, Rhs>::Scalar;
  template <class Dest>
  static void scaleAndAddTo(Dest& dst, const FredholmOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
    dst.noalias() += alpha * lhs.data().apply(nls::VecC(rhs));
  }
};
}  // namespace Eigen::internal

namespace nls {

cplx truncated_helmholtz_symbol(double s, double k, double L) {
  auto f = [&](double t) {
    const double j0 = special::bessel_j0(t * L), j1 = special::bessel_j1(t * L);
    const cplx h0 = special::hankel1_0(k * L), h1 = special::hankel1_1(k * L);
    const cplx num = 1.0 + cplx(0, 0.5 * pi * L) * (t * j1 * h0 - k * j0 * h1);
    return num / (t * t - k * k);
  };
  const double d = 1e-4 * k;
  if (std::abs(s - k) < d) return 0.5 * (f(k - d) + f(k + d));
  return f(s);
}

double truncated_yukawa_symbol(double s, double kappa, double L) {
  const double j0 = special::bessel_j0(s * L), j1 = special::bessel_j1(s * L);
  const double k0 = special::bessel_k0(kappa * L).real(), k1 = special::bessel_k1(kappa * L).real();
  return (1.0 + L * (s * j1 * k0 - kappa * j0 * k1)) / (s * s + kappa * kappa);
}

FredholmWave distorted_wave_fredholm(const std::function<double(double)>& a, const std::function<double(double)>& b,
                                     double omega, double k, double sigma_angle, const FredholmOptions& opt) {
  require(k > 0 && omega > 0, ErrorKind::invalid_argument, "distorted_wave_fredholm: need k > 0, omega > 0");
  FredholmData d;
  const int half = int(std::round(opt.half_width / opt.h));
  d.n = 2 * half + 1;
  const double diam = std::sqrt(2.0) * 2.0 * half * opt.h;
  const double L = diam * 1.0001;
  // periodic images must clear the square: box >= L + diam, even size
  d.nb = 2 * int(std::ceil((L + diam) / opt.h / 2.0)) + 2;
  d.j0 = d.nb / 2 - half;
  d.box = std::make_unique<CartesianGrid2D>(0.5 * d.nb * opt.h, d.nb);
  d.x.resize(d.n);
  for (int i = 0; i < d.n; ++i) d.x[i] = (i - half) * opt.h;

  const Eigen::Index m = Eigen::Index(d.n) * d.n;
  d.a.resize(m);
  d.b.resize(m);
  VecC rhs = VecC::Zero(2 * m);
  const double cx = k * std::cos(sigma_angle), cy = k * std::sin(sigma_angle);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) {
      const Eigen::Index idx = Eigen::Index(i) * d.n + j;
      const double r = std::hypot(d.x[i], d.x[j]);
      d.a[idx] = a(r);
      d.b[idx] = b(r);
      rhs[idx] = std::exp(cplx(0, -(cx * d.x[i] + cy * d.x[j])));
    }
  const double energy = omega + k * k, kappa = std::sqrt(omega + energy);
  const VecR& k2 = d.box->k2();
  d.g1.resize(k2.size());
  d.g2.resize(k2.size());
  for (Eigen::Index i = 0; i < k2.size(); ++i) {
    const double s = std::sqrt(k2[i]);
    d.g1[i] = truncated_helmholtz_symbol(s, k, L);
    d.g2[i] = -truncated_yukawa_symbol(s, kappa, L);
  }

  FredholmOperator A(d);
  Eigen::GMRES<FredholmOperator, Eigen::IdentityPreconditioner> gmres;
  gmres.setTolerance(opt.tol);
  gmres.setMaxIterations(opt.max_iter);
  gmres.set_restart(80);
  gmres.compute(A);
  const VecC u = gmres.solve(rhs);

  FredholmWave out;
  out.n = d.n;
  out.x = d.x;
  out.u1 = u.head(m);
  out.u2 = u.tail(m);
  out.iterations = int(gmres.iterations());
  out.residual = (d.apply(u) - rhs).norm() / rhs.norm();
  if (!(out.residual < 1e3 * opt.tol) || !u.allFinite())
    fail(ErrorKind::threshold_or_resonance,
         "distorted_wave_fredholm: GMRES did not converge (residual " + std::to_string(out.residual) + ")");
  return out;
}

}  // namespace nls
