#include "nls/grids.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "nls/quadrature.hpp"

namespace nls {

RadialGrid make_radial_grid(double r_max, int n) {
  require(r_max > 0, ErrorKind::invalid_argument, "make_radial_grid: r_max must be positive");
  require(n >= 16, ErrorKind::invalid_argument, "make_radial_grid: n must be at least 16");
  const int panels = std::max(1, n / default_panel_order);
  const int base = n / panels, extra = n % panels;
  RadialGrid g;
  g.r_max = r_max;
  g.n = n;
  g.nodes.resize(n);
  g.weights.resize(n);
  g.edges = VecR::LinSpaced(panels + 1, 0.0, r_max);
  g.offset.assign(panels + 1, 0);
  int at = 0;
  for (int p = 0; p < panels; ++p) {
    const int q = base + (p < extra ? 1 : 0);
    const auto rule = quad::gauss_legendre(q);
    const double a = g.edges[p], b = g.edges[p + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    g.offset[p] = at;
    for (int i = 0; i < q; ++i) {
      const double r = mid + half * rule.x[i];
      g.nodes[at] = r;
      g.weights[at] = half * rule.w[i] * r;
      ++at;
    }
  }
  g.offset[panels] = at;
  return g;
}

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct CartesianGrid2D::Plans {
  fftw_plan fwd = nullptr, bwd = nullptr;
  fftw_complex* buf = nullptr;
};

CartesianGrid2D::CartesianGrid2D(double half_width, int points) : L_(half_width), M_(points) {
  require(half_width > 0, ErrorKind::invalid_argument, "CartesianGrid2D: L must be positive");
  require(points >= 4 && points % 2 == 0, ErrorKind::invalid_argument, "CartesianGrid2D: M must be even");
  h_ = 2.0 * L_ / M_;
  kvec_.resize(M_);
  for (int j = 0; j < M_; ++j) {
    const int s = j < M_ / 2 ? j : j - M_;
    kvec_[j] = pi * s / L_;
  }
  k2_.resize(size());
  radius_.resize(size());
  for (int i = 0; i < M_; ++i)
    for (int j = 0; j < M_; ++j) {
      k2_[Eigen::Index(i) * M_ + j] = kvec_[i] * kvec_[i] + kvec_[j] * kvec_[j];
      radius_[Eigen::Index(i) * M_ + j] = std::hypot(x(i), x(j));
    }
  plans_ = std::make_unique<Plans>();
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->buf = fftw_alloc_complex(size());
  plans_->fwd = fftw_plan_dft_2d(M_, M_, plans_->buf, plans_->buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->bwd = fftw_plan_dft_2d(M_, M_, plans_->buf, plans_->buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

CartesianGrid2D::~CartesianGrid2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
  fftw_free(plans_->buf);
}

double CartesianGrid2D::r(Eigen::Index idx) const { return radius_[idx]; }

void CartesianGrid2D::forward(VecC& a) const {
  fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(a.data()));
}

void CartesianGrid2D::backward(VecC& a) const {
  fftw_execute_dft(plans_->bwd, reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(a.data()));
  a /= double(size());
}

VecC CartesianGrid2D::reflect(const VecC& u) const {
  VecC out(size());
  for (int i = 0; i < M_; ++i)
    for (int j = 0; j < M_; ++j)
      out[Eigen::Index(i) * M_ + j] = u[Eigen::Index((M_ - i) % M_) * M_ + (M_ - j) % M_];
  return out;
}

double CartesianGrid2D::even_residual(const VecC& u) const {
  const double nu = u.norm();
  return nu == 0 ? 0.0 : (u - reflect(u)).norm() / nu;
}

}  // namespace nls
