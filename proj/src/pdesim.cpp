#include "nls/pdesim.hpp"

#include <algorithm>
#include <cmath>

namespace nls {

namespace {

constexpr cplx I1(0.0, 1.0);

double grid_dot(const CartesianGrid2D& g, const VecR& a, const VecR& b) { return g.cell_area() * a.dot(b); }

double grid_norm(const CartesianGrid2D& g, const VecC& u) { return std::sqrt(g.cell_area()) * u.norm(); }

// |(u1, u2)|_{L^q}
double lq_norm(const CartesianGrid2D& g, const VecC& u1, const VecC& u2, double q) {
  double acc = 0;
  for (Eigen::Index i = 0; i < u1.size(); ++i) acc += std::pow(std::norm(u1[i]) + std::norm(u2[i]), 0.5 * q);
  return std::pow(g.cell_area() * acc, 1.0 / q);
}

double weighted_l2(const CartesianGrid2D& g, const VecC& u1, const VecC& u2, double s) {
  double acc = 0;
  for (Eigen::Index i = 0; i < u1.size(); ++i)
    acc += std::pow(1.0 + g.r(i) * g.r(i), s) * (std::norm(u1[i]) + std::norm(u2[i]));
  return std::sqrt(g.cell_area() * acc);
}

}  // namespace

double FieldState2D::mass() const { return grid->cell_area() * u.squaredNorm(); }

VecR Sponge::rate(const CartesianGrid2D& g) const {
  VecR out = VecR::Zero(g.size());
  if (width <= 0 || strength <= 0) return out;
  const int M = g.M();
  const double edge = g.L() - width;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const double d = std::max(std::abs(g.x(i)), std::abs(g.x(j)));
      if (d > edge) out[Eigen::Index(i) * M + j] = strength * std::pow((d - edge) / width, 2);
    }
  return out;
}

VecR radial_to_grid(const RadialSpace& S, const VecR& nodal, const CartesianGrid2D& g) {
  VecR out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = g.r(i) < S.r_max() ? S.eval(nodal, g.r(i)) : 0.0;
  return out;
}

// ---------------------------------------------------------------- NLS

SplitStep::SplitStep(GridPtr grid, NonlinearitySpec beta, double dt, Sponge sponge, int order)
    : grid_(std::move(grid)), beta_(std::move(beta)), dt_(dt) {
  require(dt > 0, ErrorKind::invalid_argument, "SplitStep: dt must be positive");
  require(order == 2 || order == 4, ErrorKind::invalid_argument, "SplitStep: order must be 2 or 4");
  beta_.validate();
  std::vector<double> w{1.0};
  if (order == 4) {
    const double c = std::cbrt(2.0);
    w = {1 / (2 - c), -c / (2 - c), 1 / (2 - c)};
  }
  // K(w0/2) N(w0) K((w0+w1)/2) N(w1) ... K(wl/2)
  std::vector<double> kf;
  kf.push_back(0.5 * w[0]);
  for (size_t j = 0; j < w.size(); ++j) {
    rot_.push_back(w[j]);
    kf.push_back(0.5 * (w[j] + (j + 1 < w.size() ? w[j + 1] : 0.0)));
  }
  const VecR& k2 = grid_->k2();
  for (double f : kf) {
    VecC e(k2.size());
    for (Eigen::Index i = 0; i < k2.size(); ++i) e[i] = std::exp(-I1 * k2[i] * (f * dt));
    kin_.push_back(e);
  }
  const VecR rate = sponge.rate(*grid_);
  sponge_ = rate.maxCoeff() > 0;
  damp_ = (-dt * rate).array().exp();
}

double SplitStep::stiffness_number() const { return dt_ * grid_->k2().maxCoeff(); }

void SplitStep::step(FieldState2D& s) const {
  for (size_t j = 0; j < rot_.size(); ++j) {
    grid_->forward(s.u);
    s.u = s.u.cwiseProduct(kin_[j]);
    grid_->backward(s.u);
    const double h = rot_[j] * dt_;
    for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u[i] *= std::exp(I1 * (beta_.beta(std::norm(s.u[i])) * h));
  }
  if (sponge_) s.u = s.u.cwiseProduct(damp_.cast<cplx>());
  grid_->forward(s.u);
  s.u = s.u.cwiseProduct(kin_.back());
  grid_->backward(s.u);
  s.t += dt_;
}

void SplitStep::advance(FieldState2D& s, int steps) const {
  for (int j = 0; j < steps; ++j) step(s);
}

FieldState2D split_step(const FieldState2D& s, double dt, const NonlinearitySpec& beta, int steps,
                        const Sponge& sponge, int order) {
  FieldState2D out = s;
  SplitStep(s.grid, beta, dt, sponge, order).advance(out, steps);
  return out;
}

double nls_energy(const FieldState2D& s, const NonlinearitySpec& beta) {
  const CartesianGrid2D& g = *s.grid;
  VecC uh = s.u;
  g.forward(uh);
  const double kin = g.cell_area() * (g.k2().cwiseProduct(uh.cwiseAbs2())).sum() / double(g.size());
  double pot = 0;
  for (Eigen::Index i = 0; i < s.u.size(); ++i) pot += beta.B(std::norm(s.u[i]));
  return kin - g.cell_area() * pot;
}

double h1_norm(const CartesianGrid2D& g, const VecC& u) {
  VecC uh = u;
  g.forward(uh);
  const double acc = ((1.0 + g.k2().array()) * uh.cwiseAbs2().array()).sum() / double(g.size());
  return std::sqrt(g.cell_area() * acc);
}

// ---------------------------------------------------------------- linearized flow

LinearFlow2D::LinearFlow2D(const LinearizedOperator& op, GridPtr grid, double dt, Sponge sponge)
    : grid_(std::move(grid)), dt_(dt) {
  require(dt > 0, ErrorKind::invalid_argument, "LinearFlow2D: dt must be positive");
  const CartesianGrid2D& g = *grid_;
  const RadialSpace& S = *op.space;
  const VecR& k2 = g.k2();
  k1_.resize(k2.size());
  k2_.resize(k2.size());
  for (Eigen::Index i = 0; i < k2.size(); ++i) {
    k1_[i] = std::exp(-I1 * (k2[i] + op.omega) * (0.5 * dt));
    k2_[i] = std::conj(k1_[i]);
  }
  const Eigen::Index m = g.size();
  e11_.resize(m);
  e12_.resize(m);
  e21_.resize(m);
  e22_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = g.r(i);
    const double a = r < S.r_max() ? S.eval_quad(op.a_q, r) : 0.0;
    const double b = r < S.r_max() ? S.eval_quad(op.b_q, r) : 0.0;
    // V = [[-a, -b], [b, a]], V^2 = (a^2 - b^2) I
    const cplx nu = std::sqrt(cplx(a * a - b * b));
    const cplx c = std::cos(nu * dt);
    const cplx sn = std::abs(nu) * dt < 1e-8 ? cplx(dt) : std::sin(nu * dt) / nu;
    e11_[i] = c + I1 * sn * a;
    e12_[i] = I1 * sn * b;
    e21_[i] = -I1 * sn * b;
    e22_[i] = c - I1 * sn * a;
  }
  const VecR rate = sponge.rate(g);
  sponge_ = rate.maxCoeff() > 0;
  damp_ = (-dt * rate).array().exp();
}

void LinearFlow2D::kinetic(VecC& u1, VecC& u2) const {
  grid_->forward(u1);
  grid_->forward(u2);
  u1 = u1.cwiseProduct(k1_);
  u2 = u2.cwiseProduct(k2_);
  grid_->backward(u1);
  grid_->backward(u2);
}

void LinearFlow2D::potential(VecC& u1, VecC& u2) const {
  for (Eigen::Index i = 0; i < u1.size(); ++i) {
    const cplx a = u1[i], b = u2[i];
    u1[i] = e11_[i] * a + e12_[i] * b;
    u2[i] = e21_[i] * a + e22_[i] * b;
    if (sponge_) {
      u1[i] *= damp_[i];
      u2[i] *= damp_[i];
    }
  }
}

void LinearFlow2D::step(VecC& u1, VecC& u2) const {
  kinetic(u1, u2);
  potential(u1, u2);
  kinetic(u1, u2);
}

std::vector<LinearSample> evolve_linearized(const LinearizedOperator& op, const DiscreteSpectrum& s, GridPtr grid,
                                            const VecC& f0, const std::vector<double>& times, double dt,
                                            bool project, const Sponge& sponge) {
  require(std::is_sorted(times.begin(), times.end()), ErrorKind::invalid_argument,
          "evolve_linearized: times must be increasing");
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  require(f0.size() == 2 * n, ErrorKind::invalid_argument, "evolve_linearized: f0 has the wrong size");
  VecR re = f0.real(), im = f0.imag();
  if (project) {
    const ProjectionSet P(op, s);
    re = P.Pc(re);
    im = P.Pc(im);
  }
  const CartesianGrid2D& g = *grid;
  VecC u1 = radial_to_grid(S, re.head(n), g).cast<cplx>() + I1 * radial_to_grid(S, im.head(n), g).cast<cplx>();
  VecC u2 = radial_to_grid(S, re.tail(n), g).cast<cplx>() + I1 * radial_to_grid(S, im.tail(n), g).cast<cplx>();
  const LinearFlow2D flow(op, grid, dt, sponge);
  std::vector<LinearSample> out;
  long done = 0;
  for (double t : times) {
    const long target = std::lround(t / dt);
    for (; done < target; ++done) flow.step(u1, u2);
    out.push_back({done * dt, u1, u2});
  }
  return out;
}

// ---------------------------------------------------------------- estimate benches

namespace {

struct BenchNorms {
  std::vector<double> strichartz, retarded;  // per pair
  double kato = 0, smoothed = 0;
};

BenchNorms run_bench(const LinearizedOperator& op, const VecR& gc, const BenchOptions& opt, int points) {
  auto grid = std::make_shared<const CartesianGrid2D>(opt.half_width, points);
  const CartesianGrid2D& g = *grid;
  const RadialSpace& S = *op.space;
  const int n = S.ndof();
  const VecC G1 = radial_to_grid(S, gc.head(n), g).cast<cplx>();
  const VecC G2 = radial_to_grid(S, gc.tail(n), g).cast<cplx>();
  const LinearFlow2D flow(op, grid, opt.dt, opt.sponge);
  const long steps = std::lround(opt.T / opt.dt);
  const size_t np = opt.pairs.size();
  BenchNorms out;

  // homogeneous flow
  {
    VecC u1 = G1, u2 = G2;
    std::vector<double> acc(np, 0.0);
    double kato = 0;
    const double f2 = lq_norm(g, G1, G2, 2.0);
    for (long j = 0; j <= steps; ++j) {
      const double w = (j == 0 || j == steps) ? 0.5 * opt.dt : opt.dt;
      for (size_t k = 0; k < np; ++k) acc[k] += w * std::pow(lq_norm(g, u1, u2, opt.pairs[k].second), opt.pairs[k].first);
      kato += w * std::pow(weighted_l2(g, u1, u2, -opt.s), 2);
      if (j < steps) flow.step(u1, u2);
    }
    for (size_t k = 0; k < np; ++k) out.strichartz.push_back(std::pow(acc[k], 1.0 / opt.pairs[k].first) / f2);
    out.kato = std::sqrt(kato) / f2;
  }
  // Duhamel term with source chi(t) G
  {
    const double d = opt.source_duration;
    auto chi = [&](double t) { return (t >= 0 && t <= d) ? std::pow(std::sin(pi * t / d), 2) : 0.0; };
    VecC u1 = VecC::Zero(g.size()), u2 = VecC::Zero(g.size());
    std::vector<double> acc(np, 0.0), src(np, 0.0);
    double smooth = 0, src_w = 0;
    const double gw = weighted_l2(g, G1, G2, opt.s);
    std::vector<double> gq(np);
    for (size_t k = 0; k < np; ++k) {
      const double q = opt.pairs[k].second;
      gq[k] = lq_norm(g, G1, G2, q / (q - 1));
    }
    for (long j = 0; j <= steps; ++j) {
      const double t = j * opt.dt;
      const double w = (j == 0 || j == steps) ? 0.5 * opt.dt : opt.dt;
      for (size_t k = 0; k < np; ++k) {
        const double p = opt.pairs[k].first;
        acc[k] += w * std::pow(lq_norm(g, u1, u2, opt.pairs[k].second), p);
        src[k] += w * std::pow(chi(t) * gq[k], p / (p - 1));
      }
      smooth += w * std::pow(weighted_l2(g, u1, u2, -opt.s), 2);
      src_w += w * std::pow(chi(t) * gw, 2);
      if (j < steps) {
        const double c0 = chi(t), c1 = chi(t + opt.dt);
        // trapezoid in time for the source
        VecC h1 = c0 * G1, h2 = c0 * G2;
        flow.step(h1, h2);
        flow.step(u1, u2);
        u1 += 0.5 * opt.dt * (h1 + c1 * G1);
        u2 += 0.5 * opt.dt * (h2 + c1 * G2);
      }
    }
    for (size_t k = 0; k < np; ++k) {
      const double p = opt.pairs[k].first;
      out.retarded.push_back(std::pow(acc[k], 1.0 / p) / std::pow(src[k], (p - 1) / p));
    }
    out.smoothed = std::sqrt(smooth) / std::sqrt(src_w);
  }
  return out;
}

std::string pair_label(const std::pair<double, double>& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%g,%g)", p.first, p.second);
  return buf;
}

}  // namespace

BenchReport strichartz_bench(const LinearizedOperator& op, const DiscreteSpectrum& s, const std::vector<VecR>& family,
                             const BenchOptions& opt) {
  require(!family.empty(), ErrorKind::invalid_argument, "strichartz_bench: empty family");
  require(opt.s > 1, ErrorKind::invalid_argument, "strichartz_bench: weight exponent must exceed 1");
  for (const auto& pq : opt.pairs) {
    const double p = pq.first, q = pq.second;
    if (!(q >= 2 && std::isfinite(q) && p >= 2 && std::abs(1.0 / p - (0.5 - 1.0 / q)) < 1e-12))
      fail(ErrorKind::invalid_argument, "strichartz_bench: pair " + pair_label(pq) + " is not admissible");
  }
  const ProjectionSet P(op, s);
  BenchReport rep;
  if (s.has_mode) {
    const VecR leak = P.Pc(s.xi);
    rep.discrete_leak = norm2(*op.space, leak) / norm2(*op.space, s.xi);
  }
  rep.all_stable = true;
  for (size_t m = 0; m < family.size(); ++m) {
    const VecR gc = P.Pc(family[m]);
    const BenchNorms a = run_bench(op, gc, opt, opt.points);
    BenchNorms b = a;
    if (opt.refine) b = run_bench(op, gc, opt, 2 * opt.points);
    auto row = [&](const std::string& shape, const std::string& ex, double x, double y) {
      BenchRow r{shape, ex, int(m), x, y, std::isfinite(x) && std::isfinite(y) && std::abs(y - x) <= 0.1 * std::abs(x)};
      rep.all_stable = rep.all_stable && r.stable;
      rep.rows.push_back(r);
    };
    for (size_t k = 0; k < opt.pairs.size(); ++k) row("strichartz", pair_label(opt.pairs[k]), a.strichartz[k], b.strichartz[k]);
    row("kato", "s=" + std::to_string(opt.s).substr(0, 4), a.kato, b.kato);
    row("smoothed_source", "s=" + std::to_string(opt.s).substr(0, 4), a.smoothed, b.smoothed);
    for (size_t k = 0; k < opt.pairs.size(); ++k) row("retarded", pair_label(opt.pairs[k]), a.retarded[k], b.retarded[k]);
  }
  return rep;
}

// ---------------------------------------------------------------- modulation

ModulationFrame::ModulationFrame(const NonlinearitySpec& beta, const RadialProfile& p0, const DiscreteSpectrum& s0,
                                 GridPtr grid)
    : beta_(beta), p0_(p0), grid_(std::move(grid)) {
  require(s0.has_mode, ErrorKind::precondition, "ModulationFrame: no internal mode");
  const int n = p0.space->ndof();
  xi1_ = radial_to_grid(*p0.space, s0.xi.head(n), *grid_);
  xi2_ = radial_to_grid(*p0.space, s0.xi.tail(n), *grid_);
  lambda_ = s0.lambda;
  nodal_[p0.omega] = p0.phi;
}

const ModulationFrame::Sample& ModulationFrame::profile(double omega) {
  auto it = cache_.find(omega);
  if (it != cache_.end()) return it->second;
  // nearest cached profile as the Newton guess
  auto hi = nodal_.lower_bound(omega);
  const VecR* guess = nullptr;
  if (hi == nodal_.end())
    guess = &std::prev(hi)->second;
  else if (hi == nodal_.begin())
    guess = &hi->second;
  else
    guess = (hi->first - omega < omega - std::prev(hi)->first) ? &hi->second : &std::prev(hi)->second;
  const RadialProfile p = polish_ground_state(beta_, omega, p0_.space, *guess);
  Sample smp;
  smp.phi = radial_to_grid(*p.space, p.phi, *grid_);
  smp.dphi = radial_to_grid(*p.space, p.domega, *grid_);
  smp.pair_phi_dphi = grid_dot(*grid_, smp.phi, smp.dphi);
  if (cache_.size() > 64) cache_.clear();
  if (nodal_.size() > 64) {
    nodal_.clear();
    nodal_[p0_.omega] = p0_.phi;
  }
  nodal_[omega] = p.phi;
  return cache_.emplace(omega, std::move(smp)).first->second;
}

std::pair<VecR, VecR> ModulationFrame::mode(double omega) {
  const Sample& s = profile(omega);
  const CartesianGrid2D& g = *grid_;
  const double P = s.pair_phi_dphi;
  const double al = grid_dot(g, VecR(xi1_ - xi2_), s.dphi) / (2 * P);
  const double be = grid_dot(g, VecR(xi1_ + xi2_), s.phi) / (2 * P);
  VecR x1 = xi1_ - al * s.phi - be * s.dphi;
  VecR x2 = xi2_ + al * s.phi - be * s.dphi;
  const double c = grid_dot(g, x1, x1) - grid_dot(g, x2, x2);
  require(c > 0, ErrorKind::numerical_failure, "ModulationFrame: mode normalization lost");
  x1 /= std::sqrt(c);
  x2 /= std::sqrt(c);
  return {x1, x2};
}

ModulationState modulation_decompose(const FieldState2D& st, ModulationFrame& frame, double omega_guess,
                                     double gamma_guess, double weight_s) {
  const CartesianGrid2D& g = frame.grid();
  double om = omega_guess, ga = gamma_guess;
  ModulationState out;
  bool ok = false;
  double prev = 1e300;
  for (int it = 0; it < 25; ++it) {
    const auto& p = frame.profile(om);
    const VecC v = std::exp(-I1 * ga) * st.u;
    const VecR re = v.real() - p.phi, im = v.imag();
    const double F1 = grid_dot(g, re, p.phi), F2 = grid_dot(g, im, p.dphi);
    const double J11 = -p.pair_phi_dphi + grid_dot(g, re, p.dphi);
    const double J12 = grid_dot(g, im, p.phi);
    const double J22 = -grid_dot(g, VecR(v.real()), p.dphi);
    // d/domega of F2 needs the second omega derivative of phi; it multiplies
    // Im r and is dropped
    const double det = J11 * J22;
    if (!(std::abs(det) > 0)) break;
    const double dg = F2 / J22;
    const double dw = (F1 - J12 * dg) / J11;
    om -= dw;
    ga -= dg;
    out.iterations = it + 1;
    if (!std::isfinite(om) || om <= 0) break;
    // round-off floor of the pairings is near 1e-13
    const double step = std::max(std::abs(dw), std::abs(dg));
    if (step < 1e-12 || (it >= 3 && step < 1e-9 && step > 0.5 * prev)) {
      ok = true;
      break;
    }
    prev = step;
  }
  if (!ok)
    fail(ErrorKind::outside_tube,
         "modulation_decompose: Newton did not converge at t = " + std::to_string(st.t) + " (state outside the tube)");
  const auto& p = frame.profile(om);
  const auto [x1, x2] = frame.mode(om);
  const VecC r = std::exp(-I1 * ga) * st.u - p.phi.cast<cplx>();
  const VecC rb = r.conjugate();
  // z = <R, sigma3 xi> with R = (r, rbar)
  const cplx z = g.cell_area() * ((x1.cast<cplx>().cwiseProduct(r)).sum() - (x2.cast<cplx>().cwiseProduct(rb)).sum());
  const VecC f = r - z * x1.cast<cplx>() - std::conj(z) * x2.cast<cplx>();
  const VecC fb = f.conjugate();
  out.omega = om;
  out.gamma = ga;
  out.z = z;
  out.f = f;
  out.f_h1 = h1_norm(g, f);
  out.f_weighted = weighted_l2(g, f, VecC::Zero(f.size()), -weight_s);
  const VecC rec = std::exp(I1 * ga) * (p.phi.cast<cplx>() + z * x1.cast<cplx>() + std::conj(z) * x2.cast<cplx>() + f);
  out.reconstruction = (rec - st.u).norm() / std::max(st.u.norm(), 1e-300);
  auto pairing = [&](const VecR& a1, const VecR& a2) {
    return std::abs(g.cell_area() * ((f.cwiseProduct(a1.cast<cplx>())).sum() + (fb.cwiseProduct(a2.cast<cplx>())).sum()));
  };
  out.constraint = std::max({pairing(p.phi, p.phi), pairing(p.dphi, VecR(-p.dphi)), pairing(x1, VecR(-x2)),
                             pairing(x2, VecR(-x1))});
  return out;
}

// ---------------------------------------------------------------- relaxation experiment

RelaxationResult soliton_relaxation_experiment(const RelaxationConfig& cfg) {
  require(cfg.epsilon >= 0 && cfg.T > 0 && cfg.dt > 0 && cfg.cadence >= cfg.dt, ErrorKind::invalid_argument,
          "soliton_relaxation_experiment: bad configuration");
  RelaxationResult res;
  GroundStateOptions go;
  go.r_max = cfg.profile_rmax;
  go.n = 16 * int(std::ceil(2.0 * cfg.profile_rmax));
  const RadialProfile p0 = solve_ground_state(cfg.beta, cfg.omega, go);
  const LinearizedOperator op = assemble_linearization(p0, cfg.beta);
  const DiscreteSpectrum s = discrete_spectrum(op);
  require(s.has_mode, ErrorKind::precondition, "soliton_relaxation_experiment: no internal mode");
  res.N = s.N;
  res.lambda = s.lambda;
  res.gamma = cfg.gamma;
  const CoefficientTable tab = taylor_coefficients(cfg.beta, p0, s, s.N);
  const RecursionResult rec = fk_recursion(tab, op, s);
  if (res.gamma < 0) {
    const ResonantData rd = resonant_data(rec, s);
    const ProjectionSet P(op, s);
    res.gamma = fgr_coefficient(op, s, P, rd.source.cast<cplx>(), rd.weight).gamma_delta;
  }

  auto grid = std::make_shared<const CartesianGrid2D>(cfg.half_width, cfg.points);
  const CartesianGrid2D& g = *grid;
  const int n = p0.space->ndof();
  FieldState2D st;
  st.grid = grid;
  {
    const VecR phi = radial_to_grid(*p0.space, p0.phi, g);
    const VecR x1 = radial_to_grid(*p0.space, s.xi.head(n), g), x2 = radial_to_grid(*p0.space, s.xi.tail(n), g);
    // R = z xi + zbar sigma1 xi with z = epsilon
    st.u = (phi + cfg.epsilon * (x1 + x2)).cast<cplx>();
  }
  // r-components of the slaved fields on the grid
  std::vector<std::pair<Monomial, VecC>> slaved;
  for (const auto& [mono, F] : slaved_fields(rec, op, s)) {
    const VecC F1 = F.head(n);
    const VecR re = radial_to_grid(*p0.space, F1.real(), g), im = radial_to_grid(*p0.space, F1.imag(), g);
    slaved.emplace_back(mono, (re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>()).eval());
  }
  const double mass0 = st.mass();
  ModulationFrame frame(cfg.beta, p0, s, grid);
  const SplitStep stepper(grid, cfg.beta, cfg.dt, Sponge{cfg.sponge_width, cfg.sponge_strength}, cfg.order);
  const int per = int(std::lround(cfg.cadence / cfg.dt));
  const int samples = int(std::lround(cfg.T / (per * cfg.dt)));
  ModulationTrack& tr = res.track;
  double om = cfg.omega, theta = 0, int_omega = 0;
  for (int k = 0; k <= samples; ++k) {
    if (k > 0) stepper.advance(st, per);
    ModulationState ms;
    try {
      ms = modulation_decompose(st, frame, om, theta + om * (k > 0 ? per * cfg.dt : 0.0), cfg.weight_s);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::outside_tube) throw;
      res.exit_time = st.t;
      res.note = "orbital tube exit at t = " + std::to_string(st.t);
      break;
    }
    if (k > 0) int_omega += 0.5 * (om + ms.omega) * per * cfg.dt;
    om = ms.omega;
    theta = ms.gamma;
    tr.t.push_back(st.t);
    tr.omega.push_back(ms.omega);
    tr.gamma.push_back(ms.gamma - int_omega);
    tr.z.push_back(ms.z);
    tr.f_h1.push_back(ms.f_h1);
    tr.f_weighted.push_back(ms.f_weighted);
    {
      VecC h = ms.f;
      for (const auto& [mono, F1] : slaved)
        h += std::pow(ms.z, mono.first) * std::pow(std::conj(ms.z), mono.second) * F1;
      tr.h_weighted.push_back(weighted_l2(g, h, VecC::Zero(h.size()), -cfg.weight_s));
    }
    tr.reconstruction.push_back(ms.reconstruction);
    tr.constraint.push_back(ms.constraint);
  }
  tr.mass_drift = std::abs(st.mass() - mass0) / mass0;
  tr.even_residual = st.even_residual();
  const size_t K = tr.t.size();
  if (K < 8) return res;

  if (cfg.epsilon == 0) {
    double dev = 0;
    // the phase enters through its drift rate; it accumulates linearly
    for (size_t k = 0; k < K; ++k)
      dev = std::max({dev, std::abs(tr.omega[k] - cfg.omega), std::abs(tr.z[k]), tr.f_h1[k],
                      k ? std::abs(tr.gamma[k] - tr.gamma[0]) / tr.t[k] : 0.0});
    res.max_deviation = dev;
    res.constant = dev < cfg.constant_tol;
  }

  // envelope: max |z| over windows of two internal periods after the transient
  const double win = 2 * (2 * pi / s.lambda);
  const double t_end = tr.t.back();
  for (double a = cfg.transient; a + win <= t_end + 1e-9; a += win) {
    double m = 0;
    for (size_t k = 0; k < K; ++k)
      if (tr.t[k] >= a && tr.t[k] < a + win) m = std::max(m, std::abs(tr.z[k]));
    res.envelope_t.push_back(a + 0.5 * win);
    res.envelope.push_back(m);
  }
  if (res.envelope.size() >= 2) {
    bool mono = true;
    for (size_t j = 1; j < res.envelope.size(); ++j) mono = mono && res.envelope[j] <= res.envelope[j - 1];
    res.envelope_decay = mono && res.envelope.back() < res.envelope.front();
    const double t0 = res.envelope_t.front(), z0 = res.envelope.front();
    double worst = 1;
    for (size_t j = 0; j < res.envelope.size(); ++j) {
      const double pr = damping_closed_form(z0, std::max(res.gamma, 0.0), res.N, res.envelope_t[j] - t0);
      res.predicted.push_back(pr);
      const double q = res.envelope[j] / pr;
      worst = std::max({worst, q, 1.0 / q});
    }
    res.prediction_factor = worst;
    res.within_factor_two = worst <= 2.0;
  }

  // omega Cauchy tail; sin^2-weighted mean over two internal periods ending at T
  // (omega oscillates at 2 lambda, a flat window leaks it)
  auto omega_at = [&](double T) {
    const double w = std::min(2 * (2 * pi / s.lambda), T);
    double acc = 0, wsum = 0;
    for (size_t k = 0; k < K; ++k)
      if (tr.t[k] > T - w && tr.t[k] <= T + 1e-9) {
        const double x = std::sin(pi * (tr.t[k] - (T - w)) / w);
        acc += x * x * tr.omega[k];
        wsum += x * x;
      }
    return wsum > 0 ? acc / wsum : tr.omega.back();
  };
  for (double T : {t_end / 4, t_end / 2, t_end}) res.cauchy.push_back(std::abs(omega_at(T) - omega_at(T / 2)));
  res.cauchy_tail = res.cauchy[2] <= 0.5 * res.cauchy[1] && res.cauchy[1] <= 0.5 * res.cauchy[0];
  {
    // slope of the smoothed omega over the second half
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int c = 0;
    const double w = 2 * (2 * pi / s.lambda);
    for (double T = std::max(t_end / 2, w); T <= t_end + 1e-9; T += 0.25 * w) {
      const double y = omega_at(T);
      sx += T, sy += y, sxx += T * T, sxy += T * y, ++c;
    }
    if (c >= 2) res.omega_drift = (c * sxy - sx * sy) / (c * sxx - sx * sx);
  }

  // weighted dispersive remainder h: mean over the first and last quarter after the transient
  {
    const double a = cfg.transient, len = 0.25 * (t_end - a);
    double e1 = 0, e2 = 0;
    int c1 = 0, c2 = 0;
    for (size_t k = 0; k < K; ++k) {
      if (tr.t[k] >= a && tr.t[k] < a + len) e1 += tr.h_weighted[k], ++c1;
      if (tr.t[k] >= t_end - len) e2 += tr.h_weighted[k], ++c2;
    }
    res.weighted_decay = c1 && c2 && e2 / c2 < e1 / c1;
  }

  // |z|_{L^{2N+2}_t}^{N+1} / epsilon
  {
    const double q = 2.0 * res.N + 2;
    double acc = 0;
    for (size_t k = 1; k < K; ++k)
      acc += 0.5 * (std::pow(std::abs(tr.z[k]), q) + std::pow(std::abs(tr.z[k - 1]), q)) * (tr.t[k] - tr.t[k - 1]);
    const double nz = std::pow(acc, (res.N + 1) / q);
    res.lp_ratio = cfg.epsilon > 0 ? nz / cfg.epsilon : 0.0;
    res.lp_bounded = std::isfinite(res.lp_ratio);
  }
  if (cfg.epsilon == 0) {
    res.envelope_decay = res.cauchy_tail = res.weighted_decay = res.within_factor_two = res.constant;
  }
  return res;
}

}  // namespace nls
