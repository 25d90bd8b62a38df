#include "nls/radial_space.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nls/quadrature.hpp"

namespace nls {

RadialSpace::RadialSpace(RadialGrid grid, int degree) : grid_(std::move(grid)), p_(degree) {
  require(p_ >= 2 && p_ <= 24, ErrorKind::invalid_argument, "RadialSpace: degree must be in [2, 24]");
  const int K = grid_.panels();
  for (int e = 0; e < K; ++e)
    require(grid_.offset[e + 1] - grid_.offset[e] >= p_ + 1, ErrorKind::invalid_argument,
            "RadialSpace: panel quadrature too coarse for the polynomial degree");
  const auto gll = quad::gauss_lobatto(p_ + 1);
  ref_nodes_ = gll.x;

  MatR V(p_ + 1, p_ + 1);
  std::vector<double> P(p_ + 1), dP(p_ + 1), ddP(p_ + 1);
  for (int i = 0; i <= p_; ++i) {
    quad::legendre_all(ref_nodes_[i], p_, P.data(), dP.data(), ddP.data());
    for (int k = 0; k <= p_; ++k) V(i, k) = P[k];
  }
  legendre_to_lagrange_ = V.inverse();

  nodes_.resize(K * p_ + 1);
  for (int e = 0; e < K; ++e) {
    const double a = grid_.edges[e], b = grid_.edges[e + 1];
    for (int i = 0; i < p_; ++i) nodes_[e * p_ + i] = a + 0.5 * (b - a) * (ref_nodes_[i] + 1.0);
  }
  nodes_[K * p_] = grid_.r_max;

  using T = Eigen::Triplet<double>;
  std::vector<T> t0, t1, t2;
  for (int e = 0; e < K; ++e) {
    const double a = grid_.edges[e], b = grid_.edges[e + 1];
    const double jac = 2.0 / (b - a);
    for (int q = grid_.offset[e]; q < grid_.offset[e + 1]; ++q) {
      const double x = (grid_.nodes[q] - a) * jac - 1.0;
      quad::legendre_all(x, p_, P.data(), dP.data(), ddP.data());
      for (int j = 0; j <= p_; ++j) {
        double v = 0, d = 0, dd = 0;
        for (int k = 0; k <= p_; ++k) {
          const double c = legendre_to_lagrange_(k, j);
          v += c * P[k];
          d += c * dP[k];
          dd += c * ddP[k];
        }
        t0.emplace_back(q, e * p_ + j, v);
        t1.emplace_back(q, e * p_ + j, d * jac);
        t2.emplace_back(q, e * p_ + j, dd * jac * jac);
      }
    }
  }
  const int nq = grid_.n, nd = ndof();
  E_.resize(nq, nd);
  E1_.resize(nq, nd);
  E2_.resize(nq, nd);
  E_.setFromTriplets(t0.begin(), t0.end());
  E1_.setFromTriplets(t1.begin(), t1.end());
  E2_.setFromTriplets(t2.begin(), t2.end());

  const auto& w = grid_.weights;
  M_ = weighted_mass(VecR::Ones(nq));
  K_ = SpMatR(E1_.transpose() * w.asDiagonal() * E1_);
  K_ = SpMatR(0.5 * (K_ + SpMatR(K_.transpose())));
  VecR inv_r2 = grid_.nodes.array().square().inverse();
  Q_ = weighted_mass(inv_r2);
}

SpMatR RadialSpace::weighted_mass(const VecR& f_quad) const {
  VecR wf = grid_.weights.cwiseProduct(f_quad);
  const SpMatR X = E_.transpose() * wf.asDiagonal() * E_;
  // exact symmetry; the triple product is only symmetric up to round-off
  return SpMatR(0.5 * (X + SpMatR(X.transpose())));
}

bool RadialSpace::locate(double r, int& e, double* basis) const {
  if (r < 0 || r > grid_.r_max) return false;
  const int K = grid_.panels();
  e = std::min(K - 1, int(r / grid_.r_max * K));
  const double a = grid_.edges[e], b = grid_.edges[e + 1];
  const double x = 2.0 * (r - a) / (b - a) - 1.0;
  double P[32], dP[32], ddP[32];
  quad::legendre_all(x, p_, P, dP, ddP);
  for (int j = 0; j <= p_; ++j) {
    double v = 0;
    for (int k = 0; k <= p_; ++k) v += legendre_to_lagrange_(k, j) * P[k];
    basis[j] = v;
  }
  return true;
}

double RadialSpace::eval_quad(const VecR& fq, double r) const {
  if (r < 0 || r > grid_.r_max) return 0.0;
  const int K = grid_.panels();
  int e = std::min(K - 1, int(r / grid_.r_max * K));
  while (e > 0 && r < grid_.edges[e]) --e;
  while (e < K - 1 && r > grid_.edges[e + 1]) ++e;
  const int q0 = grid_.offset[e], q1 = grid_.offset[e + 1];
  // barycentric form; weights recomputed per call, panels are small
  double num = 0, den = 0;
  for (int i = q0; i < q1; ++i) {
    const double xi = grid_.nodes[i];
    if (r == xi) return fq[i];
    double w = 1.0;
    for (int j = q0; j < q1; ++j)
      if (j != i) w /= (xi - grid_.nodes[j]);
    const double t = w / (r - xi);
    num += t * fq[i];
    den += t;
  }
  return num / den;
}

SpacePtr make_space(double r_max, int n, int degree) {
  return std::make_shared<const RadialSpace>(make_radial_grid(r_max, n), degree);
}

}  // namespace nls
