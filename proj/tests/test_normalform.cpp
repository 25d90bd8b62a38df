#include "doctest.h"

#include <random>

#include "nls/normalform.hpp"

using namespace nls;

namespace {

struct Setup {
  SpacePtr sp;
  LinearizedOperator op;
  DiscreteSpectrum s;
  VecR phi;
};

// Gaussian well with a cubic nonlinearity around a Gaussian background.
Setup well(double depth, int n = 384) {
  Setup w;
  w.sp = make_space(24, n);
  w.op = synthetic_linearization(1.0, [=](double r) { return depth * std::exp(-r * r); }, [](double) { return 0.0; },
                                 w.sp);
  w.s = discrete_spectrum(w.op);
  w.phi = w.sp->nodal([](double r) { return std::exp(-0.5 * r * r); });
  return w;
}

// Stacked (-n, conj n) with n = G(phi + r) - G(phi) - DG(phi)(r, rbar), G(u) = beta(|u|^2) u,
// r = z xi1 + zbar xi2, evaluated pointwise.
VecC exact_nonlinearity(const NonlinearitySpec& beta, const VecR& phi, const VecR& xi, cplx z) {
  const Eigen::Index n = phi.size();
  VecC out(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = phi[i];
    const cplx r = z * xi[i] + std::conj(z) * xi[n + i];
    const cplx u = p + r;
    const double s = p * p;
    const cplx nl = beta.beta(std::norm(u)) * u - beta.beta(s) * p - (beta.beta(s) + beta.dbeta(s) * s) * r -
                    beta.dbeta(s) * s * std::conj(r);
    out[i] = -nl;
    out[n + i] = std::conj(nl);
  }
  return out;
}

}  // namespace

TEST_CASE("FieldPoly products evaluate as products, with truncation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const int n = 4;
  auto rv = [&] {
    VecR v(n);
    for (auto& x : v) x = g(rng);
    return v;
  };
  const FieldPoly a = FieldPoly::constant(rv(), 6) + FieldPoly::linear(rv(), rv(), 6);
  const FieldPoly b = FieldPoly::constant(rv(), 6) + FieldPoly::linear(rv(), rv(), 6);
  const FieldPoly ab = a * b, abab = ab * ab;
  for (cplx z : {cplx(0.3, -0.2), cplx(-0.1, 0.7)}) {
    CHECK((ab.evaluate(z) - a.evaluate(z).cwiseProduct(b.evaluate(z))).norm() < 1e-13);
    CHECK((abab.evaluate(z) - ab.evaluate(z).cwiseProduct(ab.evaluate(z))).norm() < 1e-12);
    CHECK(((a + b).evaluate(z) - a.evaluate(z) - b.evaluate(z)).norm() < 1e-14);
  }
  // degree 8 terms fall outside max_degree 6
  const FieldPoly p4 = abab * abab.without_degrees_below(0);
  for (const auto& [mono, v] : p4.terms()) CHECK(mono.first + mono.second <= 6);
  const FieldPoly hi = ab.without_degrees_below(2);
  for (const auto& [mono, v] : hi.terms()) CHECK(mono.first + mono.second == 2);
}

TEST_CASE("Taylor table against the exact nonlinearity: truncation error of order 2N + 2") {
  const Setup w = well(2.64);
  REQUIRE(w.s.N == 1);
  const auto beta = NonlinearitySpec::cubic_quintic(1.0, -0.05);
  const CoefficientTable t = taylor_coefficients(beta, w.phi, w.s.xi, w.sp, 1);
  std::vector<double> err;
  for (double mag : {1e-2, 1e-3}) {
    const cplx z = std::polar(mag, 0.7);
    err.push_back((t.evaluate_R(z, 3) - exact_nonlinearity(beta, w.phi, w.s.xi, z)).norm());
  }
  const double order = std::log10(err[0] / err[1]);
  CHECK(order == doctest::Approx(4.0).epsilon(0.3 / 4));
  // every coefficient is real by construction and degree-bounded
  for (const auto& [mono, v] : t.R) {
    CHECK(mono.first + mono.second >= 2);
    CHECK(mono.first + mono.second <= 3);
    CHECK(v.allFinite());
  }
  CHECK(t.tail_norm() < 1e-8);
}

TEST_CASE("cubic nonlinearity: coefficients stop at degree 3; z^2 source in closed form") {
  const Setup w = well(2.64);
  const CoefficientTable t = taylor_coefficients(NonlinearitySpec::cubic(), w.phi, w.s.xi, w.sp, 2);
  for (const auto& [mono, v] : t.R)
    if (mono.first + mono.second > 3) CHECK(v.norm() == 0.0);
  // n = |phi + r|^2 (phi + r) - ...; z^2 coefficient phi (xi1^2 + 2 xi1 xi2)
  const int n = w.sp->ndof();
  const int i = n / 7;
  const double x1 = w.s.xi[i], x2 = w.s.xi[n + i], p = w.phi[i];
  const VecR R20 = t.source(2, 0);
  CHECK(R20[i] == doctest::Approx(-p * (x1 * x1 + 2 * x1 * x2)).epsilon(1e-13));
  CHECK(R20[n + i] == doctest::Approx(p * (x2 * x2 + 2 * x1 * x2)).epsilon(1e-13));

  const CoefficientTable z = taylor_coefficients(NonlinearitySpec::zero(), w.phi, w.s.xi, w.sp, 1);
  for (const auto& [mono, v] : z.R) CHECK(v.norm() == 0.0);
}

TEST_CASE("N = 1: the recursion is the identity; resonant data is symmetric") {
  const Setup w = well(2.64);
  const CoefficientTable t = taylor_coefficients(NonlinearitySpec::cubic(), w.phi, w.s.xi, w.sp, 1);
  const RecursionResult rec = fk_recursion(t, w.op, w.s);
  CHECK(rec.corrections.empty());
  CHECK(rec.table.R.size() == t.R.size());
  for (const auto& [mono, v] : t.R) CHECK((rec.table.R.at(mono) - v).norm() == 0.0);
  const ResonantData rd = resonant_data(rec, w.s);
  CHECK(rd.N == 1);
  CHECK(rd.sigma1_residual < 1e-10);
  CHECK(rd.hamiltonian.size() == 1);

  // zero nonlinearity: zero source, zero weight
  const RecursionResult r0 = fk_recursion(taylor_coefficients(NonlinearitySpec::zero(), w.phi, w.s.xi, w.sp, 1), w.op, w.s);
  const ResonantData z0 = resonant_data(r0, w.s);
  CHECK(z0.source.norm() == 0.0);
  CHECK(z0.weight.m11.norm() + z0.weight.m12.norm() + z0.weight.m21.norm() + z0.weight.m22.norm() == 0.0);
}

TEST_CASE("N = 2 recursion: degree-2 content removed, corrections decay, audit is real") {
  const Setup w = well(3.0);
  REQUIRE(w.s.N == 2);
  const auto beta = NonlinearitySpec::cubic();
  const CoefficientTable t = taylor_coefficients(beta, w.phi, w.s.xi, w.sp, 2);
  const RecursionResult rec = fk_recursion(t, w.op, w.s);
  REQUIRE(rec.corrections.size() == 3);  // z^2, z zbar, zbar^2
  for (const auto& g : rec.corrections) {
    CHECK(g.stage == 2);
    CHECK(g.residual < 1e-8);
    CHECK(g.leakage < 1e-8);
    CHECK(g.tail_slope < 0);
    CHECK(std::abs(g.energy) < w.op.omega);
  }
  for (int m = 0; m <= 2; ++m) CHECK(rec.table.R.count({m, 2 - m}) == 0);

  // sampling oracle: at random small z the degree-2 part of the transformed
  // right side, sum z^m zbar^n [P_c R_mn - (H - (m - n) lambda) F_mn], vanishes
  const ProjectionSet P(w.op, w.s);
  const SpMatR H = w.op.weak_matrix(), M = w.op.block_mass();
  const int n = w.op.ndof();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 4; ++trial) {
    const cplx z = 1e-2 * cplx(u(rng), u(rng));
    VecC acc = VecC::Zero(2 * n), scale = VecC::Zero(2 * n);
    for (const auto& g : rec.corrections) {
      const auto [m, k] = g.mono;
      const cplx c = std::pow(z, m) * std::pow(std::conj(z), k);
      const VecR src = M * P.Pc(t.source(m, k));
      acc += c * (src - (H * g.F - g.energy * (M * g.F))).cast<cplx>();
      scale += c * src.cast<cplx>();
    }
    acc[n - 1] = acc[2 * n - 1] = 0;
    CHECK(acc.norm() < 1e-10 * scale.norm());
  }

  const AuditReport au = variable_changes_audit(rec, w.op, w.s);
  CHECK(au.realness_residual < 1e-12);
  CHECK(au.min_degree == 2);
  // halving beta halves the eliminated fields
  const RecursionResult half = fk_recursion(taylor_coefficients(NonlinearitySpec::cubic(0.5), w.phi, w.s.xi, w.sp, 2),
                                            w.op, w.s);
  const AuditReport ah = variable_changes_audit(half, w.op, w.s);
  REQUIRE(ah.entries.size() == au.entries.size());
  for (size_t i = 0; i < au.entries.size(); ++i)
    CHECK(ah.entries[i].field_norm == doctest::Approx(0.5 * au.entries[i].field_norm).epsilon(1e-10));
  const AuditReport a0 = variable_changes_audit(
      fk_recursion(taylor_coefficients(NonlinearitySpec::zero(), w.phi, w.s.xi, w.sp, 2), w.op, w.s), w.op, w.s);
  for (const auto& e : a0.entries) CHECK(e.p == 0.0);
}

TEST_CASE("slaved fields solve their defining equations") {
  const Setup w = well(2.64);
  const CoefficientTable t = taylor_coefficients(NonlinearitySpec::cubic(), w.phi, w.s.xi, w.sp, 1);
  const RecursionResult rec = fk_recursion(t, w.op, w.s);
  const auto F = slaved_fields(rec, w.op, w.s);
  const ProjectionSet P(w.op, w.s);
  const SpMatC H = w.op.weak_matrix().cast<cplx>(), M = w.op.block_mass().cast<cplx>();
  const int n = w.op.ndof();
  REQUIRE(!F.empty());
  for (const auto& [mono, f] : F) {
    const double zeta = (mono.first - mono.second) * w.s.lambda;
    const VecC src = M * P.Pc(t.source(mono.first, mono.second)).cast<cplx>();
    VecC res = H * f - zeta * (M * f) - src;
    res[n - 1] = res[2 * n - 1] = 0;
    CHECK(res.norm() < 1e-8 * src.norm());
  }
}

TEST_CASE("FGR coefficient: two routes agree, imaginary residue small, zero source") {
  const Setup w = well(2.64, 768);
  const CoefficientTable t = taylor_coefficients(NonlinearitySpec::cubic(), w.phi, w.s.xi, w.sp, 1);
  const ResonantData rd = resonant_data(fk_recursion(t, w.op, w.s), w.s);
  const ProjectionSet P(w.op, w.s);
  const FgrReport f = fgr_coefficient(w.op, w.s, P, rd.source.cast<cplx>(), rd.weight);
  CHECK(f.gap < 1e-2);
  CHECK(f.imag_delta < 1e-8);
  CHECK(f.gamma_delta > 0);
  CHECK(f.sign == 1);
  CHECK(f.verdict == "pass");
  CHECK(f.energy == doctest::Approx(2 * w.s.lambda));

  const FgrReport z = fgr_coefficient(w.op, w.s, P, VecC::Zero(2 * w.op.ndof()), rd.weight);
  CHECK(z.gamma_delta == 0.0);
  CHECK(z.gamma_eps == 0.0);
  CHECK(z.verdict == "fail");
}

TEST_CASE("reduced ODE: damping law closed form and decay exponent") {
  ReducedOdeParams p;
  p.lambda = 0.55;
  p.gamma = 1e-2;
  p.N = 1;
  p.a = {0.3};
  ReducedOdeOptions damp;
  damp.damping_only = true;
  for (int N : {1, 2}) {
    p.N = N;
    p.a.assign(N, 0.3);
    const Trajectory tr = reduced_ode_integrate(p, {cplx(0.5, 0)}, 1000.0, 0.1, damp);
    const double ref = std::pow(std::pow(0.5, -2.0 * N) + 2 * N * p.gamma * 1000.0, -0.5 / N);
    CHECK(tr.abs_z.back() == doctest::Approx(ref).epsilon(1e-6));
    CHECK(damping_closed_form(0.5, p.gamma, N, 1000.0) == doctest::Approx(ref).epsilon(1e-14));
    for (size_t i = 1; i < tr.abs_z.size(); ++i) CHECK(tr.abs_z[i] <= tr.abs_z[i - 1]);
  }

  // no damping: pure rotation
  p.gamma = 0;
  p.N = 1;
  p.a = {0.8};
  ReducedOdeOptions tight;
  tight.rtol = 1e-12;
  const Trajectory rot = reduced_ode_integrate(p, {cplx(0.3, 0.4)}, 200.0, 0.1, tight);
  for (double a : rot.abs_z) CHECK(std::abs(a - 0.5) < 1e-10);

  // full model with Gamma = 1: |z| ~ t^{-1/(2N)}
  for (int N : {1, 2}) {
    p.N = N;
    p.gamma = 1.0;
    p.a.assign(N, 0.2);
    std::vector<double> times;
    for (double t = 10; t <= 1e4 * 1.0001; t *= 1.2) times.push_back(t);
    const Trajectory tr = reduced_ode_integrate_at(p, {cplx(0.5, 0)}, times);
    CHECK(fit_decay_exponent(tr, 1e2, 1e4) == doctest::Approx(-0.5 / N).epsilon(0.05));
  }

  bool threw = false;
  try {
    reduced_ode_integrate(p, {cplx(0.5, 0)}, 10.0, -1.0);
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::invalid_argument;
  }
  CHECK(threw);
}
