#include "nls/groundstate.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nls/special.hpp"

namespace nls {

// ---------------------------------------------------------------- beta

NonlinearitySpec NonlinearitySpec::cubic(double c1) {
  NonlinearitySpec s;
  s.kind = NonlinearityKind::cubic;
  s.coeffs = {0.0, c1};
  s.p0 = 3.0;
  return s;
}

NonlinearitySpec NonlinearitySpec::cubic_quintic(double c1, double c2) {
  NonlinearitySpec s;
  s.kind = NonlinearityKind::cubic_quintic;
  s.coeffs = {0.0, c1, c2};
  s.p0 = 5.0;
  return s;
}

NonlinearitySpec NonlinearitySpec::polynomial(std::vector<double> c) {
  NonlinearitySpec s;
  s.kind = NonlinearityKind::user_polynomial;
  if (c.empty()) c = {0.0};
  s.coeffs = std::move(c);
  s.p0 = std::max(3.0, 2.0 * s.degree() + 1.0);
  s.validate();
  return s;
}

NonlinearitySpec NonlinearitySpec::zero() { return polynomial({0.0}); }

bool NonlinearitySpec::is_zero() const {
  for (double c : coeffs)
    if (c != 0.0) return false;
  return true;
}

void NonlinearitySpec::validate() const {
  require(!coeffs.empty(), ErrorKind::invalid_argument, "nonlinearity: empty coefficient list");
  require(coeffs[0] == 0.0, ErrorKind::invalid_argument, "nonlinearity: beta(0) must vanish");
  for (double c : coeffs) require(std::isfinite(c), ErrorKind::invalid_argument, "nonlinearity: non-finite coefficient");
  // beta(v^2) of degree 2K in v needs p0 - 1 >= 2K
  require(p0 > 1.0 && p0 + 1e-12 >= 2.0 * degree() + 1.0 - (is_zero() ? 1e9 : 0.0), ErrorKind::invalid_argument,
          "nonlinearity: growth exponent p0 inconsistent with polynomial degree");
}

double NonlinearitySpec::beta(double s) const {
  double acc = 0;
  for (int k = degree(); k >= 0; --k) acc = acc * s + coeffs[k];
  return acc;
}

double NonlinearitySpec::dbeta(double s) const {
  double acc = 0;
  for (int k = degree(); k >= 1; --k) acc = acc * s + k * coeffs[k];
  return acc;
}

double NonlinearitySpec::B(double s) const {
  double acc = 0;
  for (int k = degree(); k >= 0; --k) acc = acc * s + coeffs[k] / (k + 1);
  return acc * s;
}

std::string NonlinearitySpec::describe() const {
  std::ostringstream os;
  os << (kind == NonlinearityKind::cubic ? "cubic" : kind == NonlinearityKind::cubic_quintic ? "cubic-quintic" : "polynomial")
     << "(";
  for (size_t k = 1; k < coeffs.size(); ++k) os << (k > 1 ? "," : "") << coeffs[k];
  os << ")";
  return os.str();
}

std::vector<double> SolitonFamily::omega() const {
  std::vector<double> w;
  for (auto& m : members) w.push_back(m.omega);
  return w;
}

std::vector<double> SolitonFamily::mass() const {
  std::vector<double> w;
  for (auto& m : members) w.push_back(m.mass);
  return w;
}

// ---------------------------------------------------------------- shooting

namespace {

using State = std::array<double, 2>;

struct Shot {
  int kind = -1;        // +1 crosses zero, -1 turns up
  double r_event = 0;
  double r_small = 0;   // first r with phi < 1e-5 phi(0), 0 if never
};

struct ProfileOde {
  const NonlinearitySpec& b;
  double omega;
  void operator()(const State& y, State& dy, double r) const {
    dy[0] = y[1];
    dy[1] = -y[1] / r + omega * y[0] - b.beta(y[0] * y[0]) * y[0];
  }
};

constexpr double r_start = 1e-5;

State start_state(const NonlinearitySpec& b, double omega, double a) {
  const double c = 0.5 * (omega * a - b.beta(a * a) * a);
  return {a + 0.5 * c * r_start * r_start, c * r_start};
}

template <class Observer>
Shot shoot(const NonlinearitySpec& b, double omega, double a, double r_stop, Observer&& obs) {
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_dense_output(1e-14, 1e-12, ode::runge_kutta_dopri5<State>());
  ProfileOde sys{b, omega};
  stepper.initialize(start_state(b, omega, a), r_start, 1e-3);
  Shot s;
  while (stepper.current_time() < r_stop) {
    stepper.do_step(sys);
    const double r = stepper.current_time();
    const State& y = stepper.current_state();
    obs(stepper);
    if (s.r_small == 0 && y[0] < 1e-5 * a) s.r_small = r;
    if (y[0] < 0) {
      s.kind = +1;
      s.r_event = r;
      return s;
    }
    if (y[1] > 0) {
      s.kind = -1;
      s.r_event = r;
      return s;
    }
  }
  s.kind = -1;
  s.r_event = r_stop;
  return s;
}

Shot classify(const NonlinearitySpec& b, double omega, double a) {
  return shoot(b, omega, a, 400.0 / std::sqrt(omega) + 50.0, [](auto&) {});
}

}  // namespace

double tail_log_derivative(double omega, double r_max) {
  return std::real(special::log_derivative_k(0, cplx(std::sqrt(omega)), r_max));
}

SpMatR helmholtz_block(const RadialSpace& sp, double omega) {
  SpMatR A = sp.stiffness() + omega * sp.mass();
  const int last = sp.ndof() - 1;
  A.coeffRef(last, last) -= sp.r_max() * tail_log_derivative(omega, sp.r_max());
  return A;
}

SpMatR lplus_matrix(const RadialProfile& p, const NonlinearitySpec& b) {
  const VecR s = p.phi_quad().array().square();
  VecR pot(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) pot[i] = b.beta(s[i]) + 2.0 * b.dbeta(s[i]) * s[i];
  return SpMatR(helmholtz_block(*p.space, p.omega) - p.space->weighted_mass(pot));
}

RadialProfile zero_profile(double omega, SpacePtr sp) {
  RadialProfile p;
  p.omega = omega;
  p.space = sp;
  p.phi = VecR::Zero(sp->ndof());
  p.dphi_q = VecR::Zero(sp->nquad());
  p.domega = VecR::Zero(sp->ndof());
  return p;
}

RadialProfile polish_ground_state(const NonlinearitySpec& b, double omega, SpacePtr sp, VecR phi) {
  const RadialSpace& S = *sp;
  const SpMatR A = helmholtz_block(S, omega);
  const SpMatR& E = S.interp();
  const VecR& w = S.grid().weights;
  bool converged = false;
  double prev_step = 1e300;
  for (int it = 0; it < 40; ++it) {
    const VecR q = E * phi;
    VecR nl(q.size()), pot(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double s = q[i] * q[i];
      nl[i] = b.beta(s) * q[i];
      pot[i] = b.beta(s) + 2.0 * b.dbeta(s) * s;
    }
    const VecR F = A * phi - E.transpose() * w.cwiseProduct(nl);
    SpMatR J = A - S.weighted_mass(pot);
    Eigen::SparseLU<SpMatR> lu(J);
    require(lu.info() == Eigen::Success, ErrorKind::numerical_failure, "ground state: singular Newton matrix: " + lu.lastErrorMessage());
    const VecR d = lu.solve(F);
    phi -= d;
    require(phi.allFinite(), ErrorKind::no_ground_state, "ground state: Newton diverged");
    // stop at round-off: tiny step, or a small step that no longer contracts
    const double dn = d.lpNorm<Eigen::Infinity>(), scale = std::max(1.0, phi.lpNorm<Eigen::Infinity>());
    if (dn < 1e-14 * scale || (dn < 1e-10 * scale && dn > 0.25 * prev_step)) {
      converged = true;
      break;
    }
    prev_step = dn;
  }
  require(converged, ErrorKind::no_ground_state, "ground state: Newton polish did not converge");

  const VecR& nodes = S.dof_nodes();
  for (int i = 0; i < S.ndof(); ++i) {
    require(phi[i] > 0, ErrorKind::no_ground_state, "ground state: polished profile changes sign at r = " + std::to_string(nodes[i]));
    if (i > 0)
      require(phi[i] < phi[i - 1] + 1e-12 * phi[0], ErrorKind::no_ground_state,
              "ground state: polished profile not decreasing near r = " + std::to_string(nodes[i]));
  }

  RadialProfile p;
  p.omega = omega;
  p.space = sp;
  p.phi = phi;
  p.phi0 = phi[0];
  p.dphi_q = S.interp_d1() * phi;
  p.mass = 2.0 * pi * phi.dot(S.mass() * phi);

  // d phi/d omega from L+ psi = -phi. The Robin data also move with omega.
  const double h = 1e-6 * omega;
  const double dD = (tail_log_derivative(omega + h, S.r_max()) - tail_log_derivative(omega - h, S.r_max())) / (2 * h);
  VecR rhs = -(S.mass() * phi);
  rhs[S.ndof() - 1] += S.r_max() * dD * phi[S.ndof() - 1];
  Eigen::SparseLU<SpMatR> lu(lplus_matrix(p, b));
  require(lu.info() == Eigen::Success, ErrorKind::numerical_failure, "ground state: singular L+");
  p.domega = lu.solve(rhs);
  p.dphi_condition = p.domega.norm() / phi.norm();
  if (!(p.dphi_condition < 1e6)) p.warnings.push_back("degenerate-family: d phi/d omega solve is ill-conditioned");
  p.residual = ode_residual(p, b).lpNorm<Eigen::Infinity>();
  return p;
}

RadialProfile solve_ground_state(const NonlinearitySpec& b, double omega, const GroundStateOptions& opt) {
  b.validate();
  require(omega > 0 && std::isfinite(omega), ErrorKind::invalid_argument, "solve_ground_state: omega must be positive");

  // Scan phi(0) over (0, shoot_max] for the first undershoot -> overshoot switch.
  const int J = 160;
  const double a_min = 1e-3;
  double lo = 0, hi = 0;
  int prev = 0;
  double a_prev = 0;
  for (int j = 0; j <= J; ++j) {
    const double a = a_min * std::pow(opt.shoot_max / a_min, double(j) / J);
    const int k = classify(b, omega, a).kind;
    if (prev == -1 && k == +1) {
      lo = a_prev;
      hi = a;
      break;
    }
    prev = k;
    a_prev = a;
  }
  if (hi == 0) {
    std::ostringstream os;
    os << "no ground state for " << b.describe() << " at omega = " << omega << ": shooting map has no sign change over phi(0) in ("
       << a_min << ", " << opt.shoot_max << "]";
    fail(ErrorKind::no_ground_state, os.str());
  }
  while (hi - lo > opt.bisect_tol * hi) {
    const double m = 0.5 * (lo + hi);
    (classify(b, omega, m).kind == +1 ? hi : lo) = m;
  }

  // Initial guess: shooting profile where trustworthy, K0-like tail afterwards.
  auto sp = make_space(opt.r_max, opt.n, opt.degree);
  const VecR& nodes = sp->dof_nodes();
  VecR guess = VecR::Zero(sp->ndof());
  const Shot probe = classify(b, omega, lo);
  double r_cut = probe.r_small > 0 ? probe.r_small : 0.7 * probe.r_event;
  r_cut = std::min(r_cut, 0.9 * probe.r_event);
  int filled = 0;
  double phi_cut = lo, r_last = 0;
  shoot(b, omega, lo, r_cut, [&](auto& st) {
    State y;
    while (filled < sp->ndof() && nodes[filled] <= st.current_time()) {
      const double r = std::max(nodes[filled], r_start);
      if (r <= r_start) {
        y = start_state(b, omega, lo);
      } else {
        st.calc_state(r, y);
      }
      guess[filled] = y[0];
      phi_cut = y[0];
      r_last = r;
      ++filled;
    }
  });
  const double s = std::sqrt(omega);
  for (int i = filled; i < sp->ndof(); ++i) {
    const double r = nodes[i];
    guess[i] = phi_cut * std::sqrt(std::max(r_last, 1e-3) / r) * std::exp(-s * (r - r_last));
  }
  guess = guess.cwiseMax(0.0);
  return polish_ground_state(b, omega, sp, guess);
}

VecR ode_residual(const RadialProfile& p, const NonlinearitySpec& b) {
  const RadialSpace& S = *p.space;
  const VecR q = S.interp() * p.phi;
  const VecR d1 = S.interp_d1() * p.phi;
  const VecR d2 = S.interp_d2() * p.phi;
  const VecR& r = S.grid().nodes;
  VecR res(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i)
    res[i] = d2[i] + d1[i] / r[i] - p.omega * q[i] + b.beta(q[i] * q[i]) * q[i];
  return res;
}

double pohozaev_residual(const RadialProfile& p, const NonlinearitySpec& b) {
  const VecR q = p.phi_quad();
  const auto& g = p.space->grid();
  double lhs = 0, ref = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double s = q[i] * q[i];
    lhs += g.weights[i] * (p.omega * s - b.B(s));
    ref += g.weights[i] * p.omega * s;
  }
  return std::abs(lhs) / ref;
}

double tail_slope(const RadialProfile& p) {
  const auto& g = p.space->grid();
  const VecR q = p.phi_quad();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (g.nodes[i] < 0.75 * g.r_max || q[i] <= 0) continue;
    const double x = g.nodes[i], y = std::log(std::sqrt(x) * q[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  require(n >= 2, ErrorKind::numerical_failure, "tail_slope: profile vanishes on the tail");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double jordan_seed_residual(const RadialProfile& p, const NonlinearitySpec& b) {
  const RadialSpace& S = *p.space;
  const VecR q = S.interp() * p.phi;
  const VecR u = S.interp() * p.domega;
  const VecR d1 = S.interp_d1() * p.domega;
  const VecR d2 = S.interp_d2() * p.domega;
  const VecR& r = S.grid().nodes;
  double worst = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double s = q[i] * q[i];
    const double lp = -d2[i] - d1[i] / r[i] + p.omega * u[i] - (b.beta(s) + 2 * b.dbeta(s) * s) * u[i];
    worst = std::max(worst, std::abs(lp + q[i]));
  }
  return worst / p.phi.lpNorm<Eigen::Infinity>();
}

SolitonFamily continue_family(const NonlinearitySpec& b, double lo, double hi, int steps, const GroundStateOptions& opt) {
  require(lo > 0 && lo < hi, ErrorKind::invalid_argument, "continue_family: need 0 < omega_lo < omega_hi");
  require(steps >= 1, ErrorKind::invalid_argument, "continue_family: steps must be >= 1");
  SolitonFamily f;
  f.beta = b;
  f.members.push_back(solve_ground_state(b, lo, opt));
  for (int j = 1; j <= steps; ++j) {
    const double w = lo + (hi - lo) * j / steps;
    const RadialProfile& prev = f.members.back();
    VecR guess = prev.phi + (w - prev.omega) * prev.domega;
    try {
      f.members.push_back(polish_ground_state(b, w, prev.space, guess));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "family break after omega = " << prev.omega << " (target " << w << "): " << e.what();
      fail(ErrorKind::family_break, os.str());
    }
  }
  return f;
}

const char* to_string(H4Verdict v) {
  switch (v) {
    case H4Verdict::pass: return "pass";
    case H4Verdict::fail: return "fail";
    case H4Verdict::degenerate: return "degenerate";
  }
  return "?";
}

std::vector<H4Row> check_h4(const SolitonFamily& f, double tol) {
  const auto& m = f.members;
  require(m.size() >= 3, ErrorKind::precondition, "check_h4: family needs at least 3 members");
  const size_t n = m.size();
  std::vector<H4Row> rows;
  for (size_t i = 0; i < n; ++i) {
    // three-point derivative on a possibly non-uniform stencil
    size_t i0 = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
    const double x0 = m[i0].omega, x1 = m[i0 + 1].omega, x2 = m[i0 + 2].omega, x = m[i].omega;
    const double y0 = m[i0].mass, y1 = m[i0 + 1].mass, y2 = m[i0 + 2].mass;
    const double fd = y0 * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) + y1 * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
                      y2 * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    const RadialSpace& S = *m[i].space;
    const double pair = 2.0 * 2.0 * pi * m[i].phi.dot(S.mass() * m[i].domega);
    H4Verdict v = std::abs(pair) < tol ? H4Verdict::degenerate : (pair > 0 ? H4Verdict::pass : H4Verdict::fail);
    rows.push_back({x, fd, pair, v});
  }
  return rows;
}

LplusCount count_negative_eigs_Lplus(const RadialProfile& p, const NonlinearitySpec& b) {
  // Sylvester inertia: negative pivots of L+ = L D L^T count the negative
  // eigenvalues of the pencil (L+, M) since M is positive definite.
  const SpMatR L = lplus_matrix(p, b);
  Eigen::SimplicialLDLT<SpMatR> ldlt(L);
  require(ldlt.info() == Eigen::Success, ErrorKind::numerical_failure, "count_negative_eigs_Lplus: LDLT failed");
  LplusCount c;
  for (Eigen::Index i = 0; i < ldlt.vectorD().size(); ++i)
    if (ldlt.vectorD()[i] < 0) ++c.negative;

  // smallest eigenvalue: inverse iteration from a shift below the spectrum
  const SpMatR& M = p.space->mass();
  const VecR s2 = p.phi.cwiseAbs2();
  const double shift = p.omega - (b.beta_of(s2) + 2.0 * b.dbeta_of(s2).cwiseProduct(s2)).maxCoeff() - 1.0;
  Eigen::SimplicialLDLT<SpMatR> inv(SpMatR(L - shift * M));
  require(inv.info() == Eigen::Success, ErrorKind::numerical_failure, "count_negative_eigs_Lplus: shifted LDLT failed");
  VecR v = p.phi;
  double mu = 0;
  for (int it = 0; it < 200; ++it) {
    VecR w = inv.solve(VecR(M * v));
    w /= std::sqrt(w.dot(M * w));
    const double next = w.dot(L * w);
    v = w;
    if (it > 0 && std::abs(next - mu) <= 1e-13 * std::max(1.0, std::abs(next))) {
      mu = next;
      break;
    }
    mu = next;
  }
  c.smallest = mu;
  return c;
}

void write_family_csv(std::ostream& os, const SolitonFamily& f) {
  os << "omega,mass,dmass_domega,phi0,neg_eigs_Lplus\n";
  os << std::setprecision(17);
  for (auto& m : f.members) {
    const double slope = 2.0 * 2.0 * pi * m.phi.dot(m.space->mass() * m.domega);
    os << m.omega << "," << m.mass << "," << slope << "," << m.phi0 << "," << count_negative_eigs_Lplus(m, f.beta).negative << "\n";
  }
}

}  // namespace nls
