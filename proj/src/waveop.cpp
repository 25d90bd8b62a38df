#include "nls/waveop.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/Polynomials>
#include <algorithm>
#include <cmath>
#include <memory>

#include "nls/special.hpp"

namespace nls {

namespace {

constexpr cplx I1(0.0, 1.0);
// nodes this close to +/- omega carry weight of order k^2 and are dropped; the
// loss shows up in tail_bound
constexpr double threshold_skip = 1e-5;

VecC real_map(const std::function<VecR(const VecR&)>& f, const VecC& g) {
  return f(g.real()).cast<cplx>() + I1 * f(g.imag()).cast<cplx>();
}

// delta(H0 - E) u in closed form: (1/2) J0(k r) int J0(k s) u_1(s) s ds e1 for E > omega.
VecC free_delta(const RadialSpace& S, double omega, double e, const VecC& u) {
  const int n = S.ndof();
  if (e < 0) return sigma1(free_delta(S, omega, -e, sigma1(u)));
  const double k = std::sqrt(e - omega);
  const VecR j0 = S.nodal([&](double r) { return special::bessel_j0(k * r); });
  const cplx c = j0.cast<cplx>().dot(S.mass().cast<cplx>() * u.head(n));
  VecC out = VecC::Zero(2 * n);
  out.head(n) = 0.5 * c * j0.cast<cplx>();
  return out;
}

// weak form of V w with V = H - H0 = [[-a, -b], [b, a]]
VecC weak_potential(const LinearizedOperator& op, const VecC& w) {
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  const SpMatC E = S.interp().cast<cplx>();
  const VecC w1 = E * w.head(n), w2 = E * w.tail(n);
  const VecC wa = S.grid().weights.cwiseProduct(op.a_q).cast<cplx>();
  const VecC wb = S.grid().weights.cwiseProduct(op.b_q).cast<cplx>();
  VecC out(2 * n);
  out.head(n) = E.transpose() * VecC(-wa.cwiseProduct(w1) - wb.cwiseProduct(w2));
  out.tail(n) = E.transpose() * VecC(wb.cwiseProduct(w1) + wa.cwiseProduct(w2));
  return out;
}

double weighted_quad_norm(const RadialSpace& S, const VecC& uq, double s, double r_cut = 1e300) {
  const VecR& r = S.grid().nodes;
  const VecR& w = S.grid().weights;
  const Eigen::Index nq = r.size();
  double acc = 0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    if (r[i] > r_cut) continue;
    acc += w[i] * std::pow(1.0 + r[i] * r[i], -s) * (std::norm(uq[i]) + std::norm(uq[nq + i]));
  }
  return std::sqrt(2.0 * pi * acc);
}

VecC to_quad(const RadialSpace& S, const VecC& u) {
  const int n = S.ndof();
  const SpMatC E = S.interp().cast<cplx>();
  return stack(VecC(E * u.head(n)), VecC(E * u.tail(n)));
}

}  // namespace

WaveResult wave_operator_apply(const LinearizedOperator& op, const VecC& f, WaveDirection dir, const ProjectionSet* P,
                               const WaveOptions& opt) {
  const RadialSpace& S = *op.space;
  const double e_max = opt.e_max_factor * op.omega;
  const EnergyRule rule = continuum_rule(op.omega, op.omega, e_max, opt.panels, opt.order);
  WaveResult out;
  VecC acc = VecC::Zero(f.size()), spec = VecC::Zero(f.size());
  if (dir == WaveDirection::W) {
    for (int side : {1, -1})
      for (Eigen::Index i = 0; i < rule.energy.size(); ++i) {
        const double e = side * rule.energy[i];
        if (rule.energy[i] - op.omega < threshold_skip) continue;
        const VecC d = free_delta(S, op.omega, e, f);
        spec += rule.weight[i] * d;
        HarmonicSolver hs(op, e, Branch::minus, 0);
        acc += rule.weight[i] * hs.solve_weak(weak_potential(op, d));
      }
    out.u = f - acc;
    out.tail_bound = norm2(S, VecC(f - spec));
  } else {
    require(P != nullptr, ErrorKind::precondition, "wave_operator_apply: Z needs the spectral projections");
    const VecC pc = real_map([&](const VecR& v) { return P->Pc(v); }, f);
    const LinearizedOperator free_op = free_linearization(op.omega, op.space);
    for (int side : {1, -1})
      for (Eigen::Index i = 0; i < rule.energy.size(); ++i) {
        const double e = side * rule.energy[i];
        if (rule.energy[i] - op.omega < threshold_skip) continue;
        const VecC d = delta_kernel_apply(op, e, pc);
        spec += rule.weight[i] * d;
        HarmonicSolver hs(free_op, e, Branch::minus, 0);
        acc += rule.weight[i] * hs.solve_weak(weak_potential(op, d));
      }
    out.u = pc + acc;
    out.tail_bound = norm2(S, VecC(pc - spec));
  }
  return out;
}

double intertwining_residual(const LinearizedOperator& op, const VecR& f, double s, const WaveOptions& opt) {
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  // H0 f by L2 projection of (-Delta + omega) f
  const SpMatR A0 = S.stiffness() + op.omega * S.mass();
  Eigen::SimplicialLDLT<SpMatR> mm(S.mass());
  VecR h0f(2 * n);
  h0f.head(n) = mm.solve(A0 * f.head(n));
  h0f.tail(n) = -mm.solve(A0 * f.tail(n));
  const VecC wf = wave_operator_apply(op, f.cast<cplx>(), WaveDirection::W, nullptr, opt).u;
  const VecC wh = wave_operator_apply(op, h0f.cast<cplx>(), WaveDirection::W, nullptr, opt).u;
  const VecC lhs = apply_H_strong(op, wf);
  const VecC rhs = to_quad(S, wh);
  return weighted_quad_norm(S, lhs - rhs, 2 * s) / weighted_quad_norm(S, rhs, 2 * s);
}

// ---------------------------------------------------------------- Pade propagator

void pade_exp_partial_fractions(int degree, std::vector<cplx>& poles, std::vector<cplx>& residues, cplx& r_inf) {
  require(degree >= 1 && degree <= 12, ErrorKind::invalid_argument, "pade: degree in [1, 12]");
  const int d = degree;
  VecR num(d + 1), den(d + 1);
  // numerator coefficients of the (d, d) approximant; denominator is N(-x)
  double c = 1.0;
  for (int k = 0; k <= d; ++k) {
    if (k > 0) c *= double(d - k + 1) / (double(k) * (2 * d - k + 1));
    num[k] = c;
    den[k] = (k % 2 ? -1.0 : 1.0) * c;
  }
  Eigen::PolynomialSolver<double, Eigen::Dynamic> ps(den);
  poles.clear();
  residues.clear();
  for (Eigen::Index j = 0; j < ps.roots().size(); ++j) {
    const cplx p = ps.roots()[j];
    cplx nv = 0, dd = 0, pw = 1;
    for (int k = 0; k <= d; ++k) {
      nv += num[k] * pw;
      if (k < d) dd += double(k + 1) * den[k + 1] * pw;
      pw *= p;
    }
    poles.push_back(p);
    residues.push_back(nv / dd);
  }
  r_inf = d % 2 ? -1.0 : 1.0;
}

PadePropagator::PadePropagator(const LinearizedOperator& op, cplx tau, int degree) : n_(op.ndof()) {
  std::vector<cplx> poles;
  pade_exp_partial_fractions(degree, poles, residues_, r_inf_);
  const SpMatR H = op.weak_matrix(), Mb = op.block_mass();
  M_ = Mb.cast<cplx>();
  const int n = n_;
  auto boundary = [n](Eigen::Index i) { return i == n - 1 || i == 2 * n - 1; };
  for (const cplx p : poles) {
    std::vector<Eigen::Triplet<cplx>> t;
    const SpMatC A = tau * H.cast<cplx>() - p * M_;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMatC::InnerIterator it(A, k); it; ++it)
        if (!boundary(it.row()) && !boundary(it.col())) t.emplace_back(it.row(), it.col(), it.value());
    t.emplace_back(n - 1, n - 1, 1.0);
    t.emplace_back(2 * n - 1, 2 * n - 1, 1.0);
    SpMatC B(2 * n, 2 * n);
    B.setFromTriplets(t.begin(), t.end());
    B.makeCompressed();
    auto lu = std::make_unique<Eigen::SparseLU<SpMatC>>();
    lu->compute(B);
    require(lu->info() == Eigen::Success, ErrorKind::numerical_failure, "PadePropagator: factorization failed");
    lu_.push_back(std::move(lu));
  }
}

VecC PadePropagator::step(const VecC& u) const {
  VecC rhs = M_ * u;
  rhs[n_ - 1] = 0;
  rhs[2 * n_ - 1] = 0;
  VecC out = r_inf_ * u;
  for (size_t j = 0; j < lu_.size(); ++j) out += residues_[j] * lu_[j]->solve(rhs);
  out[n_ - 1] = 0;
  out[2 * n_ - 1] = 0;
  return out;
}

// ---------------------------------------------------------------- time-limit oracle

std::vector<TimeLimitRow> wave_operator_time_limit(const LinearizedOperator& op, const DiscreteSpectrum& s,
                                                   const std::function<std::array<double, 2>(double)>& f,
                                                   const std::vector<double>& times, const TimeLimitOptions& opt,
                                                   const WaveOptions& wopt) {
  require(!times.empty(), ErrorKind::invalid_argument, "wave_operator_time_limit: no times");
  const RadialSpace& S = *op.space;
  const int nq = int(std::ceil(opt.box_radius)) * default_panel_order;
  const SpacePtr big_sp = make_space(std::ceil(opt.box_radius), nq, S.degree());
  const LinearizedOperator big = resample_linearization(op, big_sp);
  const LinearizedOperator free_big = free_linearization(op.omega, big_sp);

  auto move = [&](const VecR& v) {
    const int n = S.ndof();
    return stack(VecR(big_sp->nodal([&](double r) { return S.eval(VecR(v.head(n)), r); })),
                 VecR(big_sp->nodal([&](double r) { return S.eval(VecR(v.tail(n)), r); })));
  };
  DiscreteSpectrum sb = s;
  if (s.has_mode) sb.xi = move(s.xi);
  if (s.has_jordan) {
    sb.phase = move(s.phase);
    sb.scaling = move(s.scaling);
  }
  const ProjectionSet Pb(big, sb);

  auto sample = [&](const RadialSpace& sp) {
    return stack(VecR(sp.nodal([&](double r) { return f(r)[0]; })), VecR(sp.nodal([&](double r) { return f(r)[1]; })))
        .cast<cplx>()
        .eval();
  };
  const VecC wf = wave_operator_apply(op, sample(S), WaveDirection::W, nullptr, wopt).u;
  const VecC wq = to_quad(S, wf);
  const double ref = weighted_quad_norm(S, wq, 2.0, opt.compare_radius);

  const PadePropagator fwd(free_big, cplx(0, -opt.dt), opt.pade_degree);
  const PadePropagator back(big, cplx(0, opt.dt), opt.pade_degree);
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  std::vector<TimeLimitRow> rows;
  VecC u = sample(*big_sp);
  int done = 0;
  const int nb = big_sp->ndof();
  for (double T : sorted) {
    const int steps = int(std::lround(T / opt.dt));
    for (; done < steps; ++done) u = fwd.step(u);
    VecC v = real_map([&](const VecR& x) { return Pb.Pc(x); }, u);
    for (int j = 0; j < steps; ++j) v = back.step(v);
    // compare on the quadrature nodes of the original space
    const VecR& r = S.grid().nodes;
    VecC vq(2 * r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      vq[i] = big_sp->eval(VecC(v.head(nb)), r[i]);
      vq[r.size() + i] = big_sp->eval(VecC(v.tail(nb)), r[i]);
    }
    rows.push_back({steps * opt.dt, weighted_quad_norm(S, vq - wq, 2.0, opt.compare_radius) / ref});
  }
  return rows;
}

// ---------------------------------------------------------------- L^p probe

double lp_norm(const RadialSpace& S, const VecC& u, double p) {
  const VecC uq = to_quad(S, u);
  const VecR& w = S.grid().weights;
  const Eigen::Index nq = w.size();
  double acc = 0;
  for (Eigen::Index i = 0; i < nq; ++i) acc += w[i] * std::pow(std::sqrt(std::norm(uq[i]) + std::norm(uq[nq + i])), p);
  return std::pow(2.0 * pi * acc, 1.0 / p);
}

LpReport lp_bound_probe(const LinearizedOperator& op, double p,
                        const std::vector<std::function<std::array<double, 2>(double)>>& family,
                        const WaveOptions& opt) {
  require(!family.empty(), ErrorKind::invalid_argument, "lp_bound_probe: empty family");
  require(p > 1, ErrorKind::invalid_argument, "lp_bound_probe: p must exceed 1");
  LpReport rep;
  rep.p = p;
  const RadialSpace& S = *op.space;
  const LinearizedOperator fine = resample_linearization(op, make_space(S.r_max(), 2 * S.nquad(), S.degree()));
  for (int pass = 0; pass < 2; ++pass) {
    const LinearizedOperator& o = pass == 0 ? op : fine;
    auto& out = pass == 0 ? rep.ratios : rep.ratios_refined;
    for (const auto& g : family) {
      const VecC fv = stack(VecR(o.space->nodal([&](double r) { return g(r)[0]; })),
                            VecR(o.space->nodal([&](double r) { return g(r)[1]; })))
                          .cast<cplx>();
      const VecC wf = wave_operator_apply(o, fv, WaveDirection::W, nullptr, opt).u;
      out.push_back(lp_norm(*o.space, wf, p) / lp_norm(*o.space, fv, p));
    }
  }
  rep.sup = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.sup_refined = *std::max_element(rep.ratios_refined.begin(), rep.ratios_refined.end());
  rep.stable = std::abs(rep.sup_refined - rep.sup) <= 0.1 * rep.sup;
  return rep;
}

}  // namespace nls
