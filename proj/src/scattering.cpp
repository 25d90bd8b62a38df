#include "nls/scattering.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <memory>

#include "nls/quadrature.hpp"
#include "nls/special.hpp"

namespace nls {

namespace {

constexpr cplx I1(0.0, 1.0);

Branch flip(Branch b) { return b == Branch::plus ? Branch::minus : Branch::plus; }

void put(std::vector<Eigen::Triplet<cplx>>& t, const SpMatR& m, cplx scale, Eigen::Index r0, Eigen::Index c0) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMatR::InnerIterator it(m, k); it; ++it) t.emplace_back(it.row() + r0, it.col() + c0, scale * it.value());
}

VecC apply_real_map(const std::function<VecR(const VecR&)>& f, const VecC& g) {
  return f(g.real()).cast<cplx>() + I1 * f(g.imag()).cast<cplx>();
}

void check_threshold(const LinearizedOperator& op, double e) {
  if (std::abs(std::abs(e) - op.omega) < 1e-6)
    fail(ErrorKind::threshold, "energy " + std::to_string(e) + " is at the threshold +/- omega");
}

// Radial wave U_m = J_m(k r) e1 + v at E = omega + k^2.
VecC radial_wave(const LinearizedOperator& op, const HarmonicSolver& hs, double k, int m, VecC* scattered) {
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  const VecR& rq = S.grid().nodes;
  const VecR& w = S.grid().weights;
  VecR jq(rq.size());
  for (Eigen::Index i = 0; i < rq.size(); ++i) jq[i] = special::bessel_j_orders(k * rq[i], m)[m];
  VecC rhs(2 * n);
  rhs.head(n) = (S.interp().transpose() * VecR(w.cwiseProduct(op.a_q).cwiseProduct(jq))).cast<cplx>();
  rhs.tail(n) = (-(S.interp().transpose() * VecR(w.cwiseProduct(op.b_q).cwiseProduct(jq)))).cast<cplx>();
  const VecC v = hs.solve_weak(rhs);
  VecC u = v;
  const VecR jn = S.nodal([&](double r) { return special::bessel_j_orders(k * r, m)[m]; });
  u.head(n) += jn.cast<cplx>();
  if (scattered) *scattered = v;
  return u;
}

VecC wave_m0(const LinearizedOperator& op, double k, Branch side = Branch::plus) {
  HarmonicSolver hs(op, op.omega + k * k, side, 0);
  return radial_wave(op, hs, k, 0, nullptr);
}

}  // namespace

// ---------------------------------------------------------------- harmonic solver

HarmonicSolver::HarmonicSolver(const LinearizedOperator& op, cplx z, Branch side, int m) : op_(&op), m_(m), z_(z) {
  require(m >= 0, ErrorKind::invalid_argument, "HarmonicSolver: harmonic index must be >= 0");
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  const double R = S.r_max();
  if (std::abs(op.omega - z) < 1e-12 || std::abs(op.omega + z) < 1e-12)
    fail(ErrorKind::threshold, "HarmonicSolver: z is at a threshold");
  s1_ = decay_root(op.omega - z, side);
  s2_ = decay_root(op.omega + z, flip(side));
  const cplx D1 = special::log_derivative_k(m, s1_, R), D2 = special::log_derivative_k(m, s2_, R);

  const SpMatR L = op.A + double(m) * m * S.inv_r2();
  std::vector<Eigen::Triplet<cplx>> t;
  put(t, L, 1.0, 0, 0);
  put(t, S.mass(), -z, 0, 0);
  put(t, op.Wb, -1.0, 0, n);
  put(t, op.Wb, 1.0, n, 0);
  put(t, L, -1.0, n, n);
  put(t, S.mass(), -z, n, n);
  t.emplace_back(n - 1, n - 1, -R * D1);
  t.emplace_back(2 * n - 1, 2 * n - 1, R * D2);
  if (m > 0) {
    // regularity at the origin: u(0) = 0
    std::vector<Eigen::Triplet<cplx>> kept;
    for (const auto& e : t)
      if (e.row() != 0 && e.row() != n && e.col() != 0 && e.col() != n) kept.push_back(e);
    kept.emplace_back(0, 0, 1.0);
    kept.emplace_back(n, n, 1.0);
    t.swap(kept);
  }
  K_.resize(2 * n, 2 * n);
  K_.setFromTriplets(t.begin(), t.end());
  K_.makeCompressed();

  std::vector<Eigen::Triplet<cplx>> tm;
  put(tm, S.mass(), 1.0, 0, 0);
  put(tm, S.mass(), 1.0, n, n);
  Mb_.resize(2 * n, 2 * n);
  Mb_.setFromTriplets(tm.begin(), tm.end());

  lu_.compute(K_);
  require(lu_.info() == Eigen::Success, ErrorKind::threshold_or_resonance, "HarmonicSolver: singular system");
}

VecC HarmonicSolver::solve_weak(const VecC& rhs) const {
  VecC b = rhs;
  if (m_ > 0) {
    const Eigen::Index n = rhs.size() / 2;
    b[0] = 0;
    b[n] = 0;
  }
  VecC u = lu_.solve(b);
  require(u.allFinite(), ErrorKind::numerical_failure, "HarmonicSolver: non-finite solution");
  return u;
}

VecC HarmonicSolver::solve(const VecC& g) const { return solve_weak(Mb_ * g); }

VecC HarmonicSolver::point_source(double r0, int comp, double* r_used) const {
  const RadialSpace& S = *op_->space;
  const VecR& nodes = S.dof_nodes();
  Eigen::Index best = 0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i)
    if (std::abs(nodes[i] - r0) < std::abs(nodes[best] - r0)) best = i;
  require(best > 0 && best < nodes.size() - 1, ErrorKind::invalid_argument, "point_source: r0 must be interior");
  if (r_used) *r_used = nodes[best];
  VecC rhs = VecC::Zero(2 * S.ndof());
  rhs[comp * S.ndof() + best] = 1.0 / (2.0 * pi);
  return solve_weak(rhs);
}

VecC resolvent_boundary_value(const LinearizedOperator& op, cplx z, Branch side, const VecC& g, int m) {
  return HarmonicSolver(op, z, side, m).solve(g);
}

// ---------------------------------------------------------------- limiting absorption

void ResolventQuery::validate() const {
  require(eps.size() >= 3, ErrorKind::invalid_argument, "ResolventQuery: need at least 3 eps values");
  for (size_t j = 0; j < eps.size(); ++j) {
    require(eps[j] > 0, ErrorKind::invalid_argument, "ResolventQuery: eps must be positive");
    if (j > 0) require(eps[j] < eps[j - 1], ErrorKind::invalid_argument, "ResolventQuery: eps must decrease");
  }
  require(harmonic >= 0, ErrorKind::invalid_argument, "ResolventQuery: harmonic must be >= 0");
}

bool on_continuum(const LinearizedOperator& op, cplx z) {
  return z.imag() == 0.0 && std::abs(z.real()) >= op.omega;
}

ResolventResult resolvent_apply(const LinearizedOperator& op, const ResolventQuery& q, const VecC& g) {
  q.validate();
  ResolventResult out;
  if (!on_continuum(op, q.z)) {
    out.u = HarmonicSolver(op, q.z, q.side, q.harmonic).solve(g);
    return out;
  }
  check_threshold(op, q.z.real());
  if (g.isZero(0)) {
    out.u = VecC::Zero(g.size());
    return out;
  }
  const double sg = branch_sign(q.side);
  const size_t J = q.eps.size();
  std::vector<VecC> u(J);
  for (size_t j = 0; j < J; ++j)
    u[j] = HarmonicSolver(op, q.z + I1 * (sg * q.eps[j]), q.side, q.harmonic).solve(g);
  for (size_t j = 0; j + 1 < J; ++j) out.increments.push_back((u[j] - u[j + 1]).norm());
  for (size_t j = 0; j + 2 < J; ++j)
    if (!(out.increments[j + 1] < out.increments[j]))
      fail(ErrorKind::limiting_absorption_failure,
           "resolvent_apply: increments not decreasing along the eps schedule (" +
               std::to_string(out.increments[j]) + " -> " + std::to_string(out.increments[j + 1]) + ")");
  // Lagrange extrapolation to eps = 0 over all points and over the last J - 1
  auto extrapolate = [&](size_t first) {
    VecC acc = VecC::Zero(g.size());
    for (size_t j = first; j < J; ++j) {
      double c = 1.0;
      for (size_t i = first; i < J; ++i)
        if (i != j) c *= q.eps[i] / (q.eps[i] - q.eps[j]);
      acc += c * u[j];
    }
    return acc;
  };
  out.u = extrapolate(0);
  out.error_estimate = (out.u - extrapolate(1)).norm() / std::max(out.u.norm(), 1e-300);
  out.extrapolated = true;
  return out;
}

// ---------------------------------------------------------------- distorted waves

double harmonic_residual(const LinearizedOperator& op, int m, cplx energy, const VecC& u) {
  const RadialSpace& S = *op.space;
  const Eigen::Index n = S.ndof(), nq = S.nquad();
  const VecR& r = S.grid().nodes;
  const VecR& w = S.grid().weights;
  VecC val[2], Lu[2];
  for (int c = 0; c < 2; ++c) {
    const VecC uc = u.segment(c * n, n);
    val[c] = S.interp().cast<cplx>() * uc;
    const VecC d1 = S.interp_d1().cast<cplx>() * uc, d2 = S.interp_d2().cast<cplx>() * uc;
    Lu[c].resize(nq);
    for (Eigen::Index i = 0; i < nq; ++i)
      Lu[c][i] = -d2[i] - d1[i] / r[i] + (double(m) * m / (r[i] * r[i]) + op.omega - op.a_q[i]) * val[c][i];
  }
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    const double wt = w[i] / (1.0 + r[i] * r[i]) / (1.0 + r[i] * r[i]);
    const cplx e1 = Lu[0][i] - op.b_q[i] * val[1][i] - energy * val[0][i];
    const cplx e2 = op.b_q[i] * val[0][i] - Lu[1][i] - energy * val[1][i];
    num += wt * (std::norm(e1) + std::norm(e2));
    den += wt * (std::norm(val[0][i]) + std::norm(val[1][i]));
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

DistortedWaveTable distorted_wave(const LinearizedOperator& op, double k, int m_max, bool even_only) {
  require(k > 0, ErrorKind::invalid_argument, "distorted_wave: k must be positive");
  require(m_max >= 0, ErrorKind::invalid_argument, "distorted_wave: m_max must be >= 0");
  DistortedWaveTable t;
  t.k = k;
  t.omega = op.omega;
  t.energy = op.omega + k * k;
  t.m_max = m_max;
  t.even_only = even_only;
  t.space = op.space;
  const int n = op.ndof();
  for (int m = 0; m <= m_max; ++m) {
    if (even_only && m % 2) {
      t.U.push_back(VecC::Zero(2 * n));
      t.scattered.push_back(VecC::Zero(2 * n));
      continue;
    }
    HarmonicSolver hs(op, t.energy, Branch::plus, m);
    VecC v;
    t.U.push_back(radial_wave(op, hs, k, m, &v));
    t.scattered.push_back(v);
    t.residual = std::max(t.residual, harmonic_residual(op, m, t.energy, t.U.back()));
  }
  return t;
}

std::array<cplx, 2> DistortedWaveTable::eval(double x, double y, double sigma_angle) const {
  const double r = std::hypot(x, y), th = std::atan2(y, x);
  std::array<cplx, 2> out{0.0, 0.0};
  const int n = space->ndof();
  cplx phase = 1.0;
  for (int m = 0; m <= m_max; ++m) {
    const double ang = m == 0 ? 1.0 : 2.0 * std::cos(m * (th - sigma_angle));
    const cplx c = phase * ang;
    out[0] += c * space->eval(VecC(U[m].head(n)), r);
    out[1] += c * space->eval(VecC(U[m].tail(n)), r);
    phase *= -I1;
  }
  return out;
}

// ---------------------------------------------------------------- spectral density

VecC delta_kernel_apply(const LinearizedOperator& op, double energy, const VecC& g) {
  check_threshold(op, energy);
  const int n = op.ndof();
  if (std::abs(energy) < op.omega) return VecC::Zero(2 * n);
  if (energy < 0) return sigma1(delta_kernel_apply(op, -energy, sigma1(g)));
  const double k = std::sqrt(energy - op.omega);
  const VecC U = wave_m0(op, k);
  const SpMatC M = op.space->mass().cast<cplx>();
  // dot conjugates its first argument, which is the conj(U)^t sigma3 g pairing
  const cplx c = U.head(n).dot(M * g.head(n)) - U.tail(n).dot(M * g.tail(n));
  return 0.5 * c * U;
}

EnergyRule continuum_rule(double omega, double lo, double hi, int panels, int order) {
  require(lo >= omega && hi > lo, ErrorKind::invalid_argument, "continuum_rule: need omega <= lo < hi");
  const double k_lo = std::sqrt(lo - omega), k_hi = std::sqrt(hi - omega);
  std::vector<double> edges;
  if (k_lo < 1e-12) {
    // geometric toward threshold up to min(1, k_hi), uniform width <= 1 above
    const double k1 = std::min(1.0, k_hi);
    edges.push_back(0.0);
    for (int j = panels - 1; j >= 0; --j) edges.push_back(k1 * std::pow(0.5, j));
    const int extra = int(std::ceil(k_hi - k1 - 1e-12));
    for (int j = 1; j <= extra; ++j) edges.push_back(k1 + (k_hi - k1) * j / extra);
  } else {
    const int np = std::max(panels, int(std::ceil(k_hi - k_lo)));
    for (int j = 0; j <= np; ++j) edges.push_back(k_lo + (k_hi - k_lo) * j / np);
  }
  const auto gl = quad::gauss_legendre(order);
  const int P = int(edges.size()) - 1;
  EnergyRule rule{VecR(P * order), VecR(P * order)};
  for (int p = 0; p < P; ++p) {
    const double a = edges[p], b = edges[p + 1];
    for (int i = 0; i < order; ++i) {
      const double k = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[i];
      rule.energy[p * order + i] = omega + k * k;
      rule.weight[p * order + i] = 0.5 * (b - a) * gl.w[i] * 2.0 * k;
    }
  }
  return rule;
}

VecC spectral_filter(const LinearizedOperator& op, const SpectralWindow& w, const VecC& f, int panels, int order) {
  require(w.hi > w.lo, ErrorKind::invalid_argument, "spectral_filter: empty support");
  if (w.lo - op.omega < 1e-3) fail(ErrorKind::threshold, "spectral_filter: support touches the threshold");
  const EnergyRule rule = continuum_rule(op.omega, w.lo, w.hi, panels, order);
  VecC out = VecC::Zero(f.size());
  for (Eigen::Index i = 0; i < rule.energy.size(); ++i) {
    const double c = w.chi(rule.energy[i]);
    if (c == 0.0) continue;
    out += (rule.weight[i] * c) * delta_kernel_apply(op, rule.energy[i], f);
  }
  return out;
}

VecC spectral_filter_box(const BoxSpectrum& box, const SpectralWindow& w, const VecC& f) {
  return box.apply(
      f, [&](double l) { return cplx(l > w.lo && l < w.hi ? w.chi(l) : 0.0); },
      [&](int j) { return !box.is_bound(j); });
}

double completeness_error(const LinearizedOperator& op, const ProjectionSet& P, const VecR& f, double e_max) {
  require(e_max > op.omega, ErrorKind::invalid_argument, "completeness_error: e_max must exceed omega");
  const EnergyRule rule = continuum_rule(op.omega, op.omega, e_max);
  const VecC fc = f.cast<cplx>();
  VecC acc = P.Pd(f).cast<cplx>();
  for (Eigen::Index i = 0; i < rule.energy.size(); ++i) {
    // the graded rule has a node at threshold, where the density is finite
    if (rule.energy[i] - op.omega < 1e-5) continue;
    acc += rule.weight[i] * delta_kernel_apply(op, rule.energy[i], fc);
    acc += rule.weight[i] * delta_kernel_apply(op, -rule.energy[i], fc);
  }
  return norm2(*op.space, VecC(acc - fc));
}

// ---------------------------------------------------------------- FGR

MatrixField MatrixField::diagonal(const VecR& d1, const VecR& d2) {
  return {d1, VecR::Zero(d1.size()), VecR::Zero(d1.size()), d2};
}

VecC MatrixField::apply(const VecC& f) const {
  const Eigen::Index n = m11.size();
  require(f.size() == 2 * n, ErrorKind::invalid_argument, "MatrixField: size mismatch");
  VecC out(2 * n);
  out.head(n) = m11.cast<cplx>().cwiseProduct(f.head(n)) + m12.cast<cplx>().cwiseProduct(f.tail(n));
  out.tail(n) = m21.cast<cplx>().cwiseProduct(f.head(n)) + m22.cast<cplx>().cwiseProduct(f.tail(n));
  return out;
}

FgrReport fgr_coefficient(const LinearizedOperator& op, const DiscreteSpectrum& s, const ProjectionSet& P,
                          const VecC& source, const MatrixField& weight, const FgrOptions& opt) {
  require(s.has_mode, ErrorKind::precondition, "fgr_coefficient: no internal mode");
  require(s.N >= 1, ErrorKind::precondition, "fgr_coefficient: N undefined (check_h7 failed)");
  FgrReport rep;
  rep.omega = rep.omega1 = op.omega;
  rep.lambda = s.lambda;
  rep.N = s.N;
  rep.energy = (s.N + 1) * s.lambda;
  require(rep.energy > op.omega, ErrorKind::precondition, "fgr_coefficient: (N + 1) lambda is not embedded");

  const RadialSpace& S = *op.space;
  const VecC pc = apply_real_map([&](const VecR& v) { return P.Pc(v); }, source);
  const VecC s3xi = sigma3(s.xi).cast<cplx>();

  const VecC d = delta_kernel_apply(op, rep.energy, pc);
  const cplx gd = pi * pair2<cplx>(S, weight.apply(d), s3xi);

  ResolventQuery q{rep.energy, Branch::plus, opt.eps, 0};
  const VecC rp = resolvent_apply(op, q, pc).u;
  q.side = Branch::minus;
  const VecC rm = resolvent_apply(op, q, pc).u;
  const VecC jump = (rp - rm) / (2.0 * pi * I1);
  const cplx ge = pi * pair2<cplx>(S, weight.apply(jump), s3xi);

  rep.gamma_delta = gd.real();
  rep.gamma_eps = ge.real();
  rep.imag_delta = std::abs(gd.imag()) / std::max(std::abs(gd.real()), 1e-300);
  rep.imag_eps = std::abs(ge.imag()) / std::max(std::abs(ge.real()), 1e-300);
  const double scale = std::max(std::abs(rep.gamma_delta), std::abs(rep.gamma_eps));
  rep.gap = scale > 1e-300 ? std::abs(rep.gamma_delta - rep.gamma_eps) / scale : 0.0;
  if (rep.gap > opt.inconsistent)
    fail(ErrorKind::inconsistent_fgr, "fgr_coefficient: delta route " + std::to_string(rep.gamma_delta) +
                                          " vs eps route " + std::to_string(rep.gamma_eps));
  rep.confident = rep.gap <= opt.agree_tol;
  rep.sign = rep.gamma_delta > 0 ? 1 : (rep.gamma_delta < 0 ? -1 : 0);
  if (!rep.confident)
    rep.verdict = "inconclusive";
  else
    rep.verdict = std::abs(rep.gamma_delta) > opt.gamma_floor ? "pass" : "fail";
  return rep;
}

// ---------------------------------------------------------------- weighted resolvent

double weighted_resolvent_norm(const LinearizedOperator& op, double energy, double s) {
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  HarmonicSolver hs(op, energy, Branch::plus, 0);
  const MatC K = MatC(hs.matrix());
  MatR Mb = MatR::Zero(2 * n, 2 * n);
  Mb.topLeftCorner(n, n) = MatR(S.mass());
  Mb.bottomRightCorner(n, n) = MatR(S.mass());
  VecR wt(2 * n);
  for (int i = 0; i < n; ++i) wt[i] = wt[n + i] = std::pow(1.0 + S.dof_nodes()[i] * S.dof_nodes()[i], -0.5 * s);
  // T g = W K^{-1} M W g on nodal vectors; norm in the M inner product
  const MatC R = Eigen::PartialPivLU<MatC>(K).solve(Mb.cast<cplx>());
  const MatC T = wt.cast<cplx>().asDiagonal() * R * wt.cast<cplx>().asDiagonal();
  const Eigen::LLT<MatR> llt(Mb);
  const MatR Lt = llt.matrixU();
  const MatC X = Lt.cast<cplx>() * T;
  const MatC Y = Lt.cast<cplx>().transpose().triangularView<Eigen::Lower>().solve(X.adjoint()).adjoint();
  Eigen::BDCSVD<MatC> svd(Y);
  return svd.singularValues()[0];
}

DecayFit weighted_resolvent_decay(const LinearizedOperator& op, double e_lo, double e_hi, int points, double s) {
  require(points >= 2 && e_hi > e_lo && e_lo > op.omega, ErrorKind::invalid_argument,
          "weighted_resolvent_decay: bad energy range");
  DecayFit fit;
  for (int i = 0; i < points; ++i) {
    const double e = e_lo * std::pow(e_hi / e_lo, double(i) / (points - 1));
    fit.energy.push_back(e);
    fit.norm.push_back(weighted_resolvent_norm(op, e, s));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < points; ++i) {
    const double x = std::log(fit.energy[i]), y = std::log(fit.norm[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.exponent = (points * sxy - sx * sy) / (points * sxx - sx * sx);
  return fit;
}

// ---------------------------------------------------------------- far field

std::vector<FarFieldRow> far_field_check(const LinearizedOperator& op, double k, const std::vector<double>& radii,
                                         int m_max, double rho) {
  require(!radii.empty(), ErrorKind::invalid_argument, "far_field_check: no radii");
  const double r_top = *std::max_element(radii.begin(), radii.end());
  const RadialSpace& S0 = *op.space;
  const double density = double(S0.nquad()) / S0.r_max();
  const double R = std::max(S0.r_max(), r_top + 8.0);
  int nq = int(std::ceil(R * density / default_panel_order)) * default_panel_order;
  const LinearizedOperator big = resample_linearization(op, make_space(R, nq, S0.degree()));
  const double e = op.omega + k * k;
  const int n = big.ndof();
  const VecR& nodes = big.space->dof_nodes();

  std::vector<FarFieldRow> rows;
  std::vector<VecC> U;
  std::vector<std::unique_ptr<HarmonicSolver>> hs;
  for (int m = 0; m <= m_max; ++m) {
    hs.push_back(std::make_unique<HarmonicSolver>(big, e, Branch::plus, m));
    U.push_back(radial_wave(big, *hs.back(), k, m, nullptr));
  }
  for (double r : radii) {
    FarFieldRow row;
    double r_used = r;
    double num = 0, den = 0;
    for (int m = 0; m <= m_max; ++m) {
      const VecC w = hs[m]->point_source(r, 0, &r_used);
      const cplx C = I1 * std::sqrt(2.0) / (4.0 * std::sqrt(I1 * pi * k * r_used)) * std::exp(I1 * k * r_used);
      const cplx ph = std::pow(-I1, m);
      for (int i = 0; i < n; ++i) {
        if (nodes[i] > rho) break;
        for (int c = 0; c < 2; ++c) {
          const cplx ref = C * ph * U[m][c * n + i];
          num += std::norm(w[c * n + i] - ref);
          den += std::norm(ref);
        }
      }
    }
    row.r = r_used;
    row.abs_error = std::sqrt(num);
    row.rel_error = std::sqrt(num / std::max(den, 1e-300));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nls
