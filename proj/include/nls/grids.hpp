#pragma once

#include <memory>
#include <vector>

#include "nls/core.hpp"

namespace nls {

// Composite Gauss-Legendre quadrature for integrals int_0^rmax f(r) r dr.
struct RadialGrid {
  double r_max = 0;
  int n = 0;
  VecR nodes;
  VecR weights;             // include the factor r
  VecR edges;               // panel boundaries, size panels+1
  std::vector<int> offset;  // first node of each panel, size panels+1

  int panels() const { return int(edges.size()) - 1; }
  // sum_i w_i f(r_i), i.e. approximation of int f r dr
  template <class Derived>
  typename Derived::Scalar integrate(const Eigen::MatrixBase<Derived>& f) const {
    return weights.cast<typename Derived::Scalar>().dot(f.derived());
  }
};

inline constexpr int default_panel_order = 16;

RadialGrid make_radial_grid(double r_max, int n);

// Periodic square [-L, L)^2 with M points per side. Owns FFTW plans.
class CartesianGrid2D {
 public:
  CartesianGrid2D(double half_width, int points);
  ~CartesianGrid2D();
  CartesianGrid2D(const CartesianGrid2D&) = delete;
  CartesianGrid2D& operator=(const CartesianGrid2D&) = delete;

  double L() const { return L_; }
  int M() const { return M_; }
  double h() const { return h_; }
  Eigen::Index size() const { return Eigen::Index(M_) * M_; }
  double x(int j) const { return -L_ + j * h_; }
  double k(int j) const { return kvec_[j]; }
  double cell_area() const { return h_ * h_; }
  // Row-major flat index: idx = i*M + j, i along x, j along y.
  double r(Eigen::Index idx) const;
  const VecR& radius() const { return radius_; }
  const VecR& k2() const { return k2_; }  // |xi|^2 at each flat frequency index

  void forward(VecC& a) const;   // in place, unnormalised
  void backward(VecC& a) const;  // in place, includes 1/M^2

  // u(-x) on the grid: index j -> (M - j) mod M in each direction.
  VecC reflect(const VecC& u) const;
  double even_residual(const VecC& u) const;

  template <class F>
  VecR sample_radial(F&& f) const {
    VecR out(size());
    for (Eigen::Index i = 0; i < size(); ++i) out[i] = f(radius_[i]);
    return out;
  }

 private:
  double L_, h_;
  int M_;
  VecR kvec_, k2_, radius_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace nls
