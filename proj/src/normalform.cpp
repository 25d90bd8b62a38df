#include "nls/normalform.hpp"

#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>
#include <algorithm>
#include <array>
#include <cmath>

namespace nls {

// ---------------------------------------------------------------- FieldPoly

FieldPoly FieldPoly::constant(const VecR& c, int max_degree) {
  FieldPoly p(int(c.size()), max_degree);
  p.add(0, 0, c);
  return p;
}

FieldPoly FieldPoly::linear(const VecR& cz, const VecR& czb, int max_degree) {
  FieldPoly p(int(cz.size()), max_degree);
  if (max_degree >= 1) {
    p.add(1, 0, cz);
    p.add(0, 1, czb);
  }
  return p;
}

VecR FieldPoly::coeff(int m, int n) const {
  auto it = c_.find({m, n});
  return it == c_.end() ? VecR::Zero(size_) : it->second;
}

void FieldPoly::add(int m, int n, const VecR& v) {
  if (m + n > max_degree_) return;
  auto it = c_.find({m, n});
  if (it == c_.end())
    c_.emplace(Monomial{m, n}, v);
  else
    it->second += v;
}

FieldPoly FieldPoly::operator+(const FieldPoly& o) const {
  FieldPoly out(size_, std::min(max_degree_, o.max_degree_));
  for (const auto& [k, v] : c_) out.add(k.first, k.second, v);
  for (const auto& [k, v] : o.c_) out.add(k.first, k.second, v);
  return out;
}

FieldPoly FieldPoly::operator*(const FieldPoly& o) const {
  FieldPoly out(size_, std::min(max_degree_, o.max_degree_));
  for (const auto& [k1, v1] : c_)
    for (const auto& [k2, v2] : o.c_) {
      if (k1.first + k1.second + k2.first + k2.second > out.max_degree_) continue;
      out.add(k1.first + k2.first, k1.second + k2.second, v1.cwiseProduct(v2));
    }
  return out;
}

FieldPoly FieldPoly::scaled(double s) const {
  FieldPoly out = *this;
  for (auto& kv : out.c_) kv.second *= s;
  return out;
}

FieldPoly FieldPoly::without_degrees_below(int d) const {
  FieldPoly out(size_, max_degree_);
  for (const auto& [k, v] : c_)
    if (k.first + k.second >= d) out.add(k.first, k.second, v);
  return out;
}

VecC FieldPoly::evaluate(cplx z) const {
  VecC out = VecC::Zero(size_);
  for (const auto& [k, v] : c_) out += std::pow(z, k.first) * std::pow(std::conj(z), k.second) * v.cast<cplx>();
  return out;
}

namespace {

FieldPoly poly_eval(const std::vector<double>& coeffs, const FieldPoly& x) {
  // Horner in the field-polynomial ring
  FieldPoly acc(x.size(), x.max_degree());
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = acc * x;
    acc.add(0, 0, VecR::Constant(x.size(), *it));
  }
  return acc;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (size_t k = 1; k < c.size(); ++k) d.push_back(double(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

// bilinear <f, g> = 2 pi int (f1 g1 + f2 g2) r dr
double pair(const RadialSpace& S, const VecR& f, const VecR& g) { return pair2(S, f, g); }

}  // namespace

// ---------------------------------------------------------------- table

VecR CoefficientTable::source(int m, int n) const {
  auto it = R.find({m, n});
  return it == R.end() ? VecR::Zero(2 * space->ndof()) : it->second;
}

VecC CoefficientTable::evaluate_R(cplx z, int max_degree) const {
  VecC out = VecC::Zero(2 * space->ndof());
  for (const auto& [k, v] : R)
    if (k.first + k.second <= max_degree)
      out += std::pow(z, k.first) * std::pow(std::conj(z), k.second) * v.cast<cplx>();
  return out;
}

double CoefficientTable::tail_norm() const {
  const int n = space->ndof();
  double top = 0, tail = 0;
  for (const auto& [k, v] : R) {
    top = std::max(top, v.cwiseAbs().maxCoeff());
    tail = std::max({tail, std::abs(v[n - 1]), std::abs(v[2 * n - 1])});
  }
  return top > 0 ? tail / top : 0.0;
}

CoefficientTable taylor_coefficients(const NonlinearitySpec& beta, const VecR& phi, const VecR& xi, SpacePtr space,
                                     int N) {
  beta.validate();
  if (beta.kind == NonlinearityKind::user_polynomial && beta.coeffs.empty())
    fail(ErrorKind::unsupported_nonlinearity, "taylor_coefficients: empty polynomial");
  require(N >= 1, ErrorKind::invalid_argument, "taylor_coefficients: N must be >= 1");
  const int n = space->ndof();
  require(phi.size() == n && xi.size() == 2 * n, ErrorKind::invalid_argument, "taylor_coefficients: size mismatch");

  CoefficientTable t;
  t.N = N;
  t.space = space;
  t.beta = beta;
  t.phi = phi;
  t.xi = xi;

  const int D = 2 * N + 1;
  const VecR x1 = xi.head(n), x2 = xi.tail(n);
  // r = z xi_1 + zbar xi_2, rbar = z xi_2 + zbar xi_1
  const FieldPoly P = FieldPoly::constant(phi, D) + FieldPoly::linear(x1, x2, D);
  const FieldPoly Pb = FieldPoly::constant(phi, D) + FieldPoly::linear(x2, x1, D);
  const FieldPoly Q = P * Pb;
  const FieldPoly bQ = poly_eval(beta.coeffs, Q);
  const FieldPoly dbQ = poly_eval(derivative(beta.coeffs), Q);

  // n(r, rbar) = G - G(0) - G_r(0) r - G_rbar(0) rbar with G = beta(|phi + r|^2)(phi + r);
  // the constant and linear parts drop out by truncating degrees below 2.
  const FieldPoly nl = (bQ * P).without_degrees_below(2);
  for (int d = 2; d <= D; ++d)
    for (int m = 0; m <= d; ++m) {
      const int k = d - m;
      const VecR c1 = nl.coeff(m, k), c2 = nl.coeff(k, m);
      if (c1.isZero(0) && c2.isZero(0)) continue;
      t.R[{m, k}] = stack(VecR(-c1), c2);
    }

  // f-linear part: D1 = dn/dr, D2 = dn/drbar at f = 0, minus their values at R = 0.
  const FieldPoly D1 = (dbQ * Pb * P + bQ).without_degrees_below(1);
  const FieldPoly D2 = (dbQ * P * P).without_degrees_below(1);
  for (int d = 1; d <= N; ++d)
    for (int m = 0; m <= d; ++m) {
      const int k = d - m;
      MatrixField A;
      A.m11 = -D1.coeff(m, k);
      A.m12 = -D2.coeff(m, k);
      A.m21 = D2.coeff(k, m);
      A.m22 = D1.coeff(k, m);
      if (A.m11.isZero(0) && A.m12.isZero(0) && A.m21.isZero(0) && A.m22.isZero(0)) continue;
      t.A[{m, k}] = A;
    }
  return t;
}

CoefficientTable taylor_coefficients(const NonlinearitySpec& beta, const RadialProfile& p, const DiscreteSpectrum& s,
                                     int N) {
  require(s.has_mode, ErrorKind::precondition, "taylor_coefficients: no internal mode");
  return taylor_coefficients(beta, p.phi, s.xi, p.space, N);
}

// ---------------------------------------------------------------- recursion

namespace {

struct GapSolver {
  const LinearizedOperator& op;
  std::vector<VecR> right;  // discrete subspace
  int n;

  GapSolver(const LinearizedOperator& o, const DiscreteSpectrum& s) : op(o), n(o.ndof()) {
    if (s.has_mode) {
      right.push_back(s.xi);
      right.push_back(sigma1(s.xi));
    }
    if (s.has_jordan) {
      right.push_back(s.phase);
      right.push_back(s.scaling);
    }
  }

  // Bordered system [H - zeta M, M U; (sigma3 U)^T M, 0] keeps F in the
  // continuous subspace, so zeta = 0 or +/- lambda is not a singular point.
  VecR solve(double zeta, const VecR& g, double& residual) const {
    const SpMatR H = op.weak_matrix(), M = op.block_mass();
    const int d = int(right.size()), N2 = 2 * n;
    const SpMatR B = H - zeta * M;
    std::vector<Eigen::Triplet<double>> t;
    auto boundary = [&](Eigen::Index i) { return i == n - 1 || i == N2 - 1; };
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMatR::InnerIterator it(B, k); it; ++it)
        if (!boundary(it.row()) && !boundary(it.col())) t.emplace_back(it.row(), it.col(), it.value());
    t.emplace_back(n - 1, n - 1, 1.0);
    t.emplace_back(N2 - 1, N2 - 1, 1.0);
    for (int j = 0; j < d; ++j) {
      const VecR mu = M * right[j], ms = M * sigma3(right[j]);
      for (int i = 0; i < N2; ++i) {
        if (boundary(i)) continue;
        if (mu[i] != 0) t.emplace_back(i, N2 + j, mu[i]);
        if (ms[i] != 0) t.emplace_back(N2 + j, i, ms[i]);
      }
    }
    SpMatR K(N2 + d, N2 + d);
    K.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMatR> lu(K);
    if (lu.info() != Eigen::Success) return VecR();
    VecR rhs = VecR::Zero(N2 + d);
    rhs.head(N2) = M * g;
    rhs[n - 1] = 0;
    rhs[N2 - 1] = 0;
    const VecR x = lu.solve(rhs);
    residual = (K * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    return x.head(N2);
  }
};

double tail_slope_of(const RadialSpace& S, const VecR& F) {
  const int n = S.ndof();
  const VecR& r = S.dof_nodes();
  const int i0 = (3 * n) / 4;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = i0; i < n - 1; ++i) {
    const double a = std::hypot(F[i], F[n + i]);
    if (!(a > 1e-300)) continue;
    const double y = std::log(a);
    sx += r[i];
    sy += y;
    sxx += r[i] * r[i];
    sxy += r[i] * y;
    ++cnt;
  }
  if (cnt < 2) return -1e300;  // identically zero tail
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

}  // namespace

RecursionResult fk_recursion(const CoefficientTable& table, const LinearizedOperator& op, const DiscreteSpectrum& s) {
  require(s.has_mode, ErrorKind::precondition, "fk_recursion: no internal mode");
  require(op.space->ndof() == table.space->ndof(), ErrorKind::invalid_argument, "fk_recursion: space mismatch");
  RecursionResult out;
  out.table = table;
  CoefficientTable& t = out.table;
  const RadialSpace& S = *op.space;
  const ProjectionSet P(op, s);
  const GapSolver solver(op, s);
  const int D = 2 * t.N + 1;

  for (int k = std::max(2, t.stage + 1); k <= t.N; ++k) {
    std::vector<Monomial> done;
    std::vector<std::pair<Monomial, VecR>> fields;
    for (int m = 0; m <= k; ++m) {
      const int nn = k - m;
      auto it = t.R.find({m, nn});
      if (it == t.R.end()) continue;
      const double zeta = (m - nn) * s.lambda;
      if (std::abs(zeta) >= op.omega)
        fail(ErrorKind::solvability_failure, "fk_recursion: energy of z^" + std::to_string(m) + " zbar^" +
                                                 std::to_string(nn) + " is embedded");
      GapCorrection g;
      g.mono = {m, nn};
      g.stage = k;
      g.energy = zeta;
      const VecR src = P.Pc(it->second);
      g.F = solver.solve(zeta, src, g.residual);
      if (g.F.size() == 0 || !g.F.allFinite() || !(g.residual < 1e-8))
        fail(ErrorKind::solvability_failure, "fk_recursion: gap solve failed for z^" + std::to_string(m) +
                                                 " zbar^" + std::to_string(nn));
      const double fn = norm2(S, g.F);
      g.leakage = fn > 0 ? norm2(S, VecR(P.Pd(g.F))) / fn : 0.0;
      g.tail_slope = tail_slope_of(S, g.F);
      fields.emplace_back(g.mono, g.F);
      out.corrections.push_back(g);
      t.R.erase(it);
      done.push_back({m, nn});
    }
    // f = f_k - sum z^m zbar^n F_{m,n}: the A f terms feed higher degrees
    for (const auto& [mono, F] : fields)
      for (const auto& [ma, A] : t.A) {
        const int M = mono.first + ma.first, Nn = mono.second + ma.second;
        if (M + Nn > D) continue;
        const VecR add = -A.apply(F.cast<cplx>()).real();
        auto it = t.R.find({M, Nn});
        if (it == t.R.end())
          t.R[{M, Nn}] = add;
        else
          it->second += add;
      }
    t.eliminated.push_back(done);
    t.stage = k;
  }
  t.stage = std::max(t.stage, t.N);
  return out;
}

std::vector<std::pair<Monomial, VecC>> slaved_fields(const RecursionResult& rec, const LinearizedOperator& op,
                                                     const DiscreteSpectrum& s) {
  std::vector<std::pair<Monomial, VecC>> out;
  for (const GapCorrection& g : rec.corrections) out.emplace_back(g.mono, g.F.cast<cplx>());
  const ProjectionSet P(op, s);
  const GapSolver solver(op, s);
  const int k = rec.table.N + 1;
  for (int m = 0; m <= k; ++m) {
    const VecR src = P.Pc(rec.table.source(m, k - m));
    if (src.norm() == 0) continue;
    const double zeta = (m - (k - m)) * s.lambda;
    VecC F;
    if (std::abs(zeta) < op.omega) {
      double res = 0;
      F = solver.solve(zeta, src, res).cast<cplx>();
    } else {
      F = resolvent_boundary_value(op, zeta, Branch::plus, src.cast<cplx>(), 0);
    }
    require(F.size() == src.size() && F.allFinite(), ErrorKind::solvability_failure,
            "slaved_fields: solve failed");
    out.emplace_back(Monomial{m, k - m}, F);
  }
  return out;
}

ResonantData resonant_data(const RecursionResult& rec, const DiscreteSpectrum& s) {
  const CoefficientTable& t = rec.table;
  require(t.stage >= t.N, ErrorKind::precondition, "resonant_data: recursion not complete");
  ResonantData d;
  d.N = t.N;
  d.source = t.source(t.N + 1, 0);
  d.source_conj = t.source(0, t.N + 1);
  const int n = t.space->ndof();
  auto it = t.A.find({0, t.N});
  if (it != t.A.end())
    d.weight = it->second;
  else
    d.weight = MatrixField::diagonal(VecR::Zero(n), VecR::Zero(n));
  const double sn = d.source.norm();
  d.sigma1_residual = sn > 0 ? (d.source_conj + sigma1(d.source)).norm() / sn : 0.0;
  for (int m = 1; m <= t.N; ++m) d.hamiltonian.push_back(pair(*t.space, t.source(m + 1, m), sigma3(s.xi)));
  return d;
}

// ---------------------------------------------------------------- reduced ODE

namespace {

using OdeState = std::array<double, 3>;  // re z, im z, omega_hat

struct ReducedRhs {
  const ReducedOdeParams& p;
  bool damping_only;
  void operator()(const OdeState& x, OdeState& dx, double) const {
    const cplx z(x[0], x[1]);
    const double a2 = std::norm(z);
    cplx rot = damping_only ? 0.0 : p.lambda;
    if (!damping_only) {
      double am = 1;
      for (double a : p.a) {
        am *= a2;
        rot += a * am;
      }
    }
    const double damp = p.gamma * std::pow(a2, p.N);
    const cplx dz = cplx(0, -1) * rot * z - damp * z;
    dx[0] = dz.real();
    dx[1] = dz.imag();
    dx[2] = p.drift * std::pow(a2, p.N + 1);
  }
};

}  // namespace

Trajectory reduced_ode_integrate_at(const ReducedOdeParams& p, const ReducedOdeState& s0,
                                    const std::vector<double>& times, const ReducedOdeOptions& opt) {
  namespace ode = boost::numeric::odeint;
  require(p.N >= 1, ErrorKind::invalid_argument, "reduced_ode_integrate: N must be >= 1");
  require(std::isfinite(p.gamma), ErrorKind::invalid_argument, "reduced_ode_integrate: gamma not finite");
  require(!times.empty() && std::is_sorted(times.begin(), times.end()), ErrorKind::invalid_argument,
          "reduced_ode_integrate: times must be increasing");
  Trajectory tr;
  OdeState x{s0.z.real(), s0.z.imag(), s0.omega_hat};
  auto observe = [&](const OdeState& y, double t) {
    const cplx z(y[0], y[1]);
    tr.t.push_back(t);
    tr.z.push_back(z);
    tr.abs_z.push_back(std::abs(z));
    tr.omega_hat.push_back(y[2]);
  };
  std::vector<double> ts;
  if (times.front() > s0.t) ts.push_back(s0.t);
  ts.insert(ts.end(), times.begin(), times.end());
  double h0 = 1e-3;
  if (p.lambda > 0) h0 = std::min(h0, 0.01 / p.lambda);
  try {
    auto stepper = ode::make_controlled(opt.atol, opt.rtol, ode::runge_kutta_dopri5<OdeState>());
    ode::integrate_times(stepper, ReducedRhs{p, opt.damping_only}, x, ts.begin(), ts.end(), h0, observe,
                         ode::max_step_checker(1000000));
  } catch (const ode::step_adjustment_error& e) {
    fail(ErrorKind::stiffness, std::string("reduced_ode_integrate: ") + e.what());
  } catch (const ode::no_progress_error& e) {
    fail(ErrorKind::stiffness, std::string("reduced_ode_integrate: ") + e.what());
  }
  if (times.front() > s0.t) {
    tr.t.erase(tr.t.begin());
    tr.z.erase(tr.z.begin());
    tr.abs_z.erase(tr.abs_z.begin());
    tr.omega_hat.erase(tr.omega_hat.begin());
  }
  return tr;
}

Trajectory reduced_ode_integrate(const ReducedOdeParams& p, const ReducedOdeState& s0, double T, double dt,
                                 const ReducedOdeOptions& opt) {
  require(T > 0 && dt > 0, ErrorKind::invalid_argument, "reduced_ode_integrate: T and dt must be positive");
  if (p.lambda > 0)
    require(dt < 0.1 / p.lambda, ErrorKind::invalid_argument, "reduced_ode_integrate: need dt < 0.1 / lambda");
  std::vector<double> times;
  const long steps = std::lround(T / dt);
  for (long j = 0; j <= steps; ++j) times.push_back(s0.t + j * dt);
  return reduced_ode_integrate_at(p, s0, times, opt);
}

double damping_closed_form(double z0, double gamma, int N, double t) {
  return std::pow(std::pow(z0, -2.0 * N) + 2.0 * N * gamma * t, -0.5 / N);
}

double fit_decay_exponent(const Trajectory& tr, double t_lo, double t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.t[i] < t_lo || tr.t[i] > t_hi || !(tr.abs_z[i] > 0)) continue;
    const double x = std::log(tr.t[i]), y = std::log(tr.abs_z[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  require(cnt >= 2, ErrorKind::invalid_argument, "fit_decay_exponent: fewer than two samples in the window");
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

// ---------------------------------------------------------------- audit

AuditReport variable_changes_audit(const RecursionResult& rec, const LinearizedOperator& op,
                                   const DiscreteSpectrum& s) {
  AuditReport rep;
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  rep.min_degree = rec.corrections.empty() ? 0 : 1 << 20;
  VecR Phi;
  if (s.has_jordan) Phi = sigma3(s.phase);
  for (const auto& g : rec.corrections) {
    ChangeOfVariables c;
    c.mono = g.mono;
    c.stage = g.stage;
    c.field_norm = norm2(S, g.F);
    c.p = pair(S, g.F, sigma3(s.xi));
    c.pbar = pair(S, g.F, sigma3(sigma1(s.xi)));
    c.q = Phi.size() ? pair(S, g.F, Phi) : 0.0;
    rep.entries.push_back(c);
    rep.min_degree = std::min(rep.min_degree, g.mono.first + g.mono.second);
    if (!g.F.allFinite()) rep.ok = false;
  }
  // sum z^m zbar^n F_{m,n} must have the (r, rbar) structure: second
  // component the conjugate of the first, at sample points z
  double top = 0, bad = 0;
  for (const cplx z : {cplx(0.3, 0.1), cplx(-0.2, 0.25), cplx(0.05, -0.4)}) {
    VecC u = VecC::Zero(2 * n);
    for (const auto& g : rec.corrections)
      u += std::pow(z, g.mono.first) * std::pow(std::conj(z), g.mono.second) * g.F.cast<cplx>();
    top = std::max(top, u.cwiseAbs().maxCoeff());
    bad = std::max(bad, (u.tail(n) - u.head(n).conjugate()).cwiseAbs().maxCoeff());
  }
  rep.realness_residual = top > 0 ? bad / top : 0.0;
  if (rep.realness_residual > 1e-12) rep.ok = false;
  if (!rec.corrections.empty() && rep.min_degree < 2) rep.ok = false;
  if (!rep.ok) fail(ErrorKind::bookkeeping, "variable_changes_audit: change of variables violates its structure");
  return rep;
}

}  // namespace nls
