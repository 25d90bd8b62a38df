#pragma once

#include <memory>

#include "nls/grids.hpp"

namespace nls {

// Continuous piecewise-polynomial space on the panels of a RadialGrid.
// Degrees of freedom are nodal values at Gauss-Lobatto points; the grid's
// Gauss-Legendre nodes serve as the element quadrature. Index 0 is r = 0 and
// the last index is r = r_max.
inline constexpr int default_degree = 15;

class RadialSpace {
 public:
  RadialSpace(RadialGrid grid, int degree = default_degree);

  const RadialGrid& grid() const { return grid_; }
  int degree() const { return p_; }
  int ndof() const { return int(nodes_.size()); }
  int nquad() const { return grid_.n; }
  double r_max() const { return grid_.r_max; }
  const VecR& dof_nodes() const { return nodes_; }

  const SpMatR& interp() const { return E_; }      // values at quadrature nodes
  const SpMatR& interp_d1() const { return E1_; }  // d/dr at quadrature nodes
  const SpMatR& interp_d2() const { return E2_; }  // d2/dr2 at quadrature nodes
  const SpMatR& mass() const { return M_; }        // int u v r dr
  const SpMatR& stiffness() const { return K_; }   // int u' v' r dr
  const SpMatR& inv_r2() const { return Q_; }      // int u v r^{-1} dr

  // int f u v r dr with f sampled at quadrature nodes.
  SpMatR weighted_mass(const VecR& f_quad) const;

  template <class F>
  VecR nodal(F&& f) const {
    VecR out(ndof());
    for (int i = 0; i < ndof(); ++i) out[i] = f(nodes_[i]);
    return out;
  }

  // Point evaluation of the piecewise polynomial; zero beyond r_max.
  template <class S>
  S eval(const Vec<S>& c, double r) const {
    int e;
    double basis[32];
    if (!locate(r, e, basis)) return S(0);
    S acc(0);
    for (int j = 0; j <= p_; ++j) acc += basis[j] * c[e * p_ + j];
    return acc;
  }
  template <class S>
  Vec<S> eval_many(const Vec<S>& c, const VecR& r) const {
    Vec<S> out(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = eval(c, r[i]);
    return out;
  }

  // Interpolates data given at the quadrature nodes (Lagrange on the panel's
  // Gauss points). Zero beyond r_max.
  double eval_quad(const VecR& fq, double r) const;

  // Bilinear 2D pairing int f g dx for radial scalars (no conjugation).
  template <class S>
  S pair(const Vec<S>& f, const Vec<S>& g) const {
    return 2.0 * pi * f.dot(M_.cast<S>() * g) ;
  }

 private:
  bool locate(double r, int& e, double* basis) const;

  RadialGrid grid_;
  int p_;
  VecR nodes_;
  VecR ref_nodes_;
  MatR legendre_to_lagrange_;  // columns: Lagrange basis in Legendre coefficients
  SpMatR E_, E1_, E2_, M_, K_, Q_;
};

using SpacePtr = std::shared_ptr<const RadialSpace>;

SpacePtr make_space(double r_max, int n, int degree = default_degree);

}  // namespace nls
