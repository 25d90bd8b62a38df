#include "nls/linearization.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>

namespace nls {

namespace {

SpMatR block2(const SpMatR& a, const SpMatR& b, const SpMatR& c, const SpMatR& d) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Triplet<double>> t;
  auto put = [&](const SpMatR& m, Eigen::Index r0, Eigen::Index c0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMatR::InnerIterator it(m, k); it; ++it) t.emplace_back(it.row() + r0, it.col() + c0, it.value());
  };
  put(a, 0, 0);
  put(b, 0, n);
  put(c, n, 0);
  put(d, n, n);
  SpMatR out(2 * n, 2 * n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpMatR sigma_matrix(Eigen::Index n, int which) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (which == 1) {
      t.emplace_back(i, n + i, 1.0);
      t.emplace_back(n + i, i, 1.0);
    } else {
      t.emplace_back(i, i, 1.0);
      t.emplace_back(n + i, n + i, -1.0);
    }
  }
  SpMatR s(2 * n, 2 * n);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

void finish(LinearizedOperator& op) {
  const RadialSpace& S = *op.space;
  op.A = S.stiffness() + op.omega * S.mass() - S.weighted_mass(op.a_q);
  op.Wb = S.weighted_mass(op.b_q);
}

}  // namespace

SpMatR LinearizedOperator::weak_matrix() const { return block2(A, -Wb, Wb, -A); }

SpMatR LinearizedOperator::block_mass() const {
  SpMatR z(ndof(), ndof());
  return block2(space->mass(), z, z, space->mass());
}

double LinearizedOperator::anticommutation_residual() const {
  const SpMatR H = weak_matrix(), s1 = sigma_matrix(ndof(), 1);
  return SpMatR(s1 * H + H * s1).norm();
}

double LinearizedOperator::pseudo_hermiticity_residual() const {
  const SpMatR H = weak_matrix(), s3 = sigma_matrix(ndof(), 3);
  return SpMatR(SpMatR(H.transpose()) - s3 * H * s3).norm();
}

double LinearizedOperator::boundary_potential() const {
  const Eigen::Index last = a_q.size() - 1;
  return std::abs(a_q[last]) + std::abs(b_q[last]);
}

LinearizedOperator assemble_linearization(const RadialProfile& p, const NonlinearitySpec& beta) {
  LinearizedOperator op;
  op.omega = p.omega;
  op.space = p.space;
  const VecR q = p.phi_quad();
  op.a_q.resize(q.size());
  op.b_q.resize(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double s = q[i] * q[i];
    op.b_q[i] = beta.dbeta(s) * s;
    op.a_q[i] = beta.beta(s) + op.b_q[i];
  }
  op.phi = p.phi;
  op.domega = p.domega;
  op.tail_D = tail_log_derivative(p.omega, p.space->r_max());
  finish(op);
  return op;
}

LinearizedOperator synthetic_linearization(double omega, const std::function<double(double)>& a,
                                           const std::function<double(double)>& b, SpacePtr sp) {
  require(omega > 0, ErrorKind::invalid_argument, "synthetic_linearization: omega must be positive");
  LinearizedOperator op;
  op.omega = omega;
  op.space = sp;
  op.synthetic = true;
  const VecR& r = sp->grid().nodes;
  op.a_q.resize(r.size());
  op.b_q.resize(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    op.a_q[i] = a(r[i]);
    op.b_q[i] = b(r[i]);
  }
  const double edge = std::abs(a(sp->r_max())) + std::abs(b(sp->r_max()));
  require(op.a_q.allFinite() && op.b_q.allFinite(), ErrorKind::invalid_argument, "synthetic_linearization: non-finite potential");
  require(edge < 1e-10, ErrorKind::invalid_argument, "synthetic_linearization: potentials do not decay by r_max");
  finish(op);
  return op;
}

LinearizedOperator free_linearization(double omega, SpacePtr sp) {
  return synthetic_linearization(omega, [](double) { return 0.0; }, [](double) { return 0.0; }, std::move(sp));
}

LinearizedOperator resample_linearization(const LinearizedOperator& op, SpacePtr sp) {
  LinearizedOperator out;
  out.omega = op.omega;
  out.synthetic = op.synthetic;
  out.discretization = op.discretization;
  out.tail_D = op.tail_D;
  const RadialSpace& from = *op.space;
  const VecR& r = sp->grid().nodes;
  out.a_q.resize(r.size());
  out.b_q.resize(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    out.a_q[i] = from.eval_quad(op.a_q, r[i]);
    out.b_q[i] = from.eval_quad(op.b_q, r[i]);
  }
  if (op.has_profile()) {
    out.phi = sp->nodal([&](double x) { return from.eval(op.phi, x); });
    out.domega = sp->nodal([&](double x) { return from.eval(op.domega, x); });
  }
  out.space = std::move(sp);
  finish(out);
  return out;
}

VecC apply_H_strong(const LinearizedOperator& op, const VecC& u) {
  const VecR re = apply_H_strong(op, VecR(u.real())), im = apply_H_strong(op, VecR(u.imag()));
  return re.cast<cplx>() + cplx(0, 1) * im.cast<cplx>();
}

VecR apply_H_strong(const LinearizedOperator& op, const VecR& u) {
  const RadialSpace& S = *op.space;
  const Eigen::Index n = op.ndof(), nq = S.nquad();
  const VecR& r = S.grid().nodes;
  VecR Lu[2], val[2];
  for (int c = 0; c < 2; ++c) {
    const VecR uc = u.segment(c * n, n);
    val[c] = S.interp() * uc;
    const VecR d1 = S.interp_d1() * uc, d2 = S.interp_d2() * uc;
    Lu[c].resize(nq);
    for (Eigen::Index i = 0; i < nq; ++i)
      Lu[c][i] = -d2[i] - d1[i] / r[i] + (op.omega - op.a_q[i]) * val[c][i];
  }
  VecR out(2 * nq);
  out.head(nq) = Lu[0] - op.b_q.cwiseProduct(val[1]);
  out.tail(nq) = op.b_q.cwiseProduct(val[0]) - Lu[1];
  return out;
}

double quad_norm(const LinearizedOperator& op, const VecR& uq) {
  const VecR& w = op.space->grid().weights;
  const Eigen::Index nq = w.size();
  double acc = 0;
  for (int c = 0; c < 2; ++c) acc += w.dot(uq.segment(c * nq, nq).cwiseAbs2());
  return std::sqrt(2.0 * pi * acc);
}

// ---------------------------------------------------------------- box spectrum

BoxSpectrum::BoxSpectrum(const LinearizedOperator& op) : op_(op) {
  const RadialSpace& S = *op.space;
  n_ = S.ndof() - 1;
  const MatR M = MatR(S.mass()).topLeftCorner(n_, n_);
  Eigen::LLT<MatR> llt(M);
  require(llt.info() == Eigen::Success, ErrorKind::numerical_failure, "box spectrum: mass matrix not positive");
  Lc_ = llt.matrixL();
  const MatR A = MatR(op.A).topLeftCorner(n_, n_), B = MatR(op.Wb).topLeftCorner(n_, n_);
  auto congruence = [&](const MatR& X) {
    MatR Y = Lc_.triangularView<Eigen::Lower>().solve(X);
    MatR Z = Lc_.triangularView<Eigen::Lower>().solve(Y.transpose());
    return MatR(0.5 * (Z + Z.transpose()));
  };
  const MatR Sm = congruence(A + B), Ap = congruence(A - B);

  Eigen::SelfAdjointEigenSolver<MatR> es(Sm);
  require(es.info() == Eigen::Success, ErrorKind::numerical_failure, "box spectrum: eigensolver failed on L + b");
  const VecR d = es.eigenvalues();
  const double dmax = d.cwiseAbs().maxCoeff();
  require(d.minCoeff() > -1e-9 * dmax, ErrorKind::numerical_failure,
          "box spectrum: L + b is not positive semidefinite; square-root form unavailable");
  VecR sq(d.size()), isq(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = std::max(d[i], 0.0);
    sq[i] = std::sqrt(v);
    isq[i] = v > 1e-13 * dmax ? 1.0 / std::sqrt(v) : 0.0;
  }
  const MatR& V = es.eigenvectors();
  const MatR Sh = V * sq.asDiagonal() * V.transpose();
  MatR T = Sh * Ap * Sh;
  T = 0.5 * (T + T.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatR> et(T);
  require(et.info() == Eigen::Success, ErrorKind::numerical_failure, "box spectrum: eigensolver failed");
  mu_ = et.eigenvalues();
  // Anything left this close to 0 is a remnant of the Jordan block.
  zero_cut_ = 1e-4 * op.omega * op.omega;
  P1_ = Sh * et.eigenvectors();
  // d parts from (L - b) s = lambda d rather than S^{-1/2} Q: near the kernel
  // of L + b the inverse square root loses the phase direction.
  P2_ = V * isq.asDiagonal() * V.transpose() * et.eigenvectors();
  const MatR ApP1 = Ap * P1_;
  for (int j = 0; j < size(); ++j)
    if (std::abs(mu_[j]) > zero_cut_) P2_.col(j) = ApP1.col(j) / mu_[j];
  Sm_ = Lc_.transpose().triangularView<Eigen::Upper>().solve(P1_);
  Dm_ = Lc_.transpose().triangularView<Eigen::Upper>().solve(P2_);

  const MatR MS = M * Sm_, MD = M * Dm_;
  const VecR& nodes = S.dof_nodes();
  loc_.resize(mu_.size());
  for (int j = 0; j < size(); ++j) {
    const double l2 = std::max(mu_[j], 0.0);
    double in = 0, tot = 0;
    for (int i = 0; i < n_; ++i) {
      const double e = Sm_(i, j) * MS(i, j) + l2 * Dm_(i, j) * MD(i, j);
      tot += e;
      if (nodes[i] < 0.5 * S.r_max()) in += e;
    }
    loc_[j] = tot > 0 ? in / tot : 0.0;
  }
}

double BoxSpectrum::localization(int j) const { return loc_[j]; }

bool BoxSpectrum::is_bound(int j) const {
  const double w2 = op_.omega * op_.omega;
  return mu_[j] > zero_cut_ && mu_[j] < w2 && loc_[j] > 0.99;
}

VecR BoxSpectrum::mode(int j, int sign) const {
  const int N = n_ + 1;
  const VecR s = Sm_.col(j), d = sign * lambda(j) * Dm_.col(j);
  VecR out = VecR::Zero(2 * N);
  out.head(n_) = 0.5 * (s + d);
  out.segment(N, n_) = 0.5 * (s - d);
  return out;
}

void BoxSpectrum::to_hat(const VecC& f, VecC& sh, VecC& dh) const {
  const int N = n_ + 1;
  const VecC s = f.head(n_) + f.segment(N, n_), d = f.head(n_) - f.segment(N, n_);
  // s^ = L^T s; projections use P2^T s^ and P1^T d^
  sh = Lc_.transpose().cast<cplx>() * s;
  dh = Lc_.transpose().cast<cplx>() * d;
}

VecC BoxSpectrum::from_hat(const VecC& sh, const VecC& dh) const {
  const int N = n_ + 1;
  const MatC Lt = Lc_.transpose().cast<cplx>();
  const VecC s = Lt.triangularView<Eigen::Upper>().solve(sh), d = Lt.triangularView<Eigen::Upper>().solve(dh);
  VecC out = VecC::Zero(2 * N);
  out.head(n_) = 0.5 * (s + d);
  out.segment(N, n_) = 0.5 * (s - d);
  return out;
}

VecC BoxSpectrum::apply(const VecC& f, const std::function<cplx(double)>& g, const std::function<bool(int)>& keep,
                        double mu_cut) const {
  VecC sh, dh;
  to_hat(f, sh, dh);
  const VecC alpha = P2_.transpose().cast<cplx>() * sh, beta = P1_.transpose().cast<cplx>() * dh;
  VecC x = VecC::Zero(size()), y = VecC::Zero(size());
  const double cut = std::max(mu_cut, zero_cut_);
  for (int j = 0; j < size(); ++j) {
    if (mu_[j] <= cut) continue;
    if (keep && !keep(j)) continue;
    const double l = lambda(j);
    const cplx cp = 0.5 * alpha[j] + 0.5 * beta[j] / l, cm = 0.5 * alpha[j] - 0.5 * beta[j] / l;
    const cplx gp = g(l), gm = g(-l);
    x[j] = gp * cp + gm * cm;
    y[j] = l * (gp * cp - gm * cm);
  }
  return from_hat(P1_.cast<cplx>() * x, P2_.cast<cplx>() * y);
}

VecR BoxSpectrum::apply_real(const VecR& f, const std::function<double(double)>& g, const std::function<bool(int)>& keep,
                             double mu_cut) const {
  return apply(f.cast<cplx>(), [&](double l) { return cplx(g(l)); }, keep, mu_cut).real();
}

// ---------------------------------------------------------------- discrete spectrum

int check_h7(double lambda, double omega, double tol) {
  require(lambda > 0 && lambda < omega, ErrorKind::precondition, "check_h7: need 0 < lambda < omega");
  const double ratio = omega / lambda;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < tol)
    fail(ErrorKind::resonance_violation, "check_h7: omega / lambda = " + std::to_string(ratio) + " is an integer");
  return int(std::floor(ratio));
}

namespace {

// Inverse iteration with two-sided Rayleigh quotient; sigma3 H is symmetric
// in the weak form, so the quotient is stationary.
void refine_mode(const LinearizedOperator& op, double& lambda, VecR& xi) {
  const int N = op.ndof();
  const SpMatR H = op.weak_matrix(), Mb = op.block_mass();
  std::vector<int> keep;
  for (int i = 0; i < 2 * N; ++i)
    if (i != N - 1 && i != 2 * N - 1) keep.push_back(i);
  const int m = int(keep.size());
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < m; ++i) tr.emplace_back(i, keep[i], 1.0);
  SpMatR P(m, 2 * N);
  P.setFromTriplets(tr.begin(), tr.end());
  const SpMatR Hi = P * H * SpMatR(P.transpose()), Mi = P * Mb * SpMatR(P.transpose());
  VecR x = P * xi;
  VecR s3(m);
  for (int i = 0; i < m; ++i) s3[i] = keep[i] < N ? 1.0 : -1.0;
  for (int it = 0; it < 3; ++it) {
    Eigen::SparseLU<SpMatR> lu(SpMatR(Hi - lambda * Mi));
    if (lu.info() != Eigen::Success) break;
    VecR y = lu.solve(Mi * x);
    if (!y.allFinite()) break;
    y /= y.norm();
    const VecR sy = s3.cwiseProduct(y);
    lambda = sy.dot(Hi * y) / sy.dot(Mi * y);
    x = y;
  }
  xi = P.transpose() * x;
}

}  // namespace

DiscreteSpectrum discrete_spectrum(const LinearizedOperator& op) { return discrete_spectrum(op, BoxSpectrum(op)); }

DiscreteSpectrum discrete_spectrum(const LinearizedOperator& op, const BoxSpectrum& box) {
  const RadialSpace& S = *op.space;
  DiscreteSpectrum out;
  out.omega = op.omega;
  std::vector<int> bound;
  for (int j = 0; j < box.size(); ++j) {
    if (box.mu()[j] < -box.zero_cut()) {
      out.unstable = true;
      ++out.neg_eigs;
    }
    if (box.is_bound(j)) bound.push_back(j);
  }
  if (out.unstable) out.h9_pass = false;
  for (size_t k = 1; k < bound.size(); ++k) out.extra.push_back(box.lambda(bound[k]));
  if (!out.extra.empty()) out.h9_pass = false;

  if (!bound.empty()) {
    out.has_mode = true;
    out.status = "ok";
    double lambda = box.lambda(bound[0]);
    VecR xi = box.mode(bound[0], +1);
    refine_mode(op, lambda, xi);
    double nrm = pair2(S, xi, sigma3(xi));
    if (nrm < 0) fail(ErrorKind::numerical_failure, "discrete_spectrum: internal mode has negative Krein signature");
    xi /= std::sqrt(nrm);
    // fix the overall sign: first component positive at the origin
    if (xi[0] < 0) xi = -xi;
    out.lambda = lambda;
    out.xi = xi;
    out.normalization = pair2(S, xi, sigma3(xi));
    try {
      out.N = check_h7(lambda, op.omega);
      out.h7_pass = true;
    } catch (const Error&) {
      out.N = 0;
      out.h7_pass = false;
    }
    // discrete residuals of H xi = lambda xi and H sigma1 xi = -lambda sigma1 xi
    const SpMatR H = op.weak_matrix(), Mb = op.block_mass();
    auto resid = [&](const VecR& v, double l) {
      VecR e = H * v - l * (Mb * v);
      const int N = op.ndof();
      e[N - 1] = 0;
      e[2 * N - 1] = 0;
      Eigen::SimplicialLDLT<SpMatR> mm(Mb);
      return norm2(S, VecR(mm.solve(e)));
    };
    out.eig_residual = resid(xi, lambda);
    out.companion_residual = resid(sigma1(xi), -lambda);
  } else {
    out.status = "no-internal-mode";
  }

  if (op.has_profile()) {
    out.has_jordan = true;
    out.phase = stack(op.phi, VecR(-op.phi));
    out.scaling = stack(op.domega, op.domega);
    const VecR hp = apply_H_strong(op, out.phase), hs = apply_H_strong(op, out.scaling);
    const VecR pq = stack(VecR(S.interp() * op.phi), VecR(-(S.interp() * op.phi)));
    const VecR& w = S.grid().weights;
    const Eigen::Index nq = w.size();
    auto qdot = [&](const VecR& x, const VecR& y) {
      return w.dot(x.head(nq).cwiseProduct(y.head(nq))) + w.dot(x.tail(nq).cwiseProduct(y.tail(nq)));
    };
    out.jordan_constant = qdot(hs, pq) / qdot(pq, pq);
    out.phase_residual = quad_norm(op, hp);
    out.scaling_residual = quad_norm(op, hs - out.jordan_constant * pq);
  }
  return out;
}

// ---------------------------------------------------------------- projections

ProjectionSet::ProjectionSet(const LinearizedOperator& op, const DiscreteSpectrum& s, const BoxSpectrum* box)
    : space_(op.space), box_(box) {
  if (s.has_mode) {
    right_.push_back(s.xi);
    left_.push_back(sigma3(s.xi));
    right_.push_back(sigma1(s.xi));
    left_.push_back(sigma3(sigma1(s.xi)));
  }
  zero_begin_ = int(right_.size());
  if (s.has_jordan) {
    right_.push_back(s.phase);
    left_.push_back(sigma3(s.phase));  // Phi
    right_.push_back(s.scaling);
    left_.push_back(sigma3(s.scaling));
  }
  const int m = int(right_.size());
  if (m == 0) return;
  MatR G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = pair2(*space_, right_[j], left_[i]);
  Eigen::JacobiSVD<MatR> svd(G);
  const VecR sv = svd.singularValues();
  gram_cond_ = sv[0] / sv[m - 1];
  if (!(gram_cond_ < 1e10))
    fail(ErrorKind::conditioning_failure,
         "spectral_projections: biorthogonal system is ill-conditioned (cond = " + std::to_string(gram_cond_) + ")");
  gram_inv_ = G.inverse();
}

VecR ProjectionSet::Pd(const VecR& f) const {
  VecR out = VecR::Zero(f.size());
  const int m = int(right_.size());
  if (m == 0) return out;
  VecR c(m);
  for (int i = 0; i < m; ++i) c[i] = pair2(*space_, f, left_[i]);
  const VecR a = gram_inv_ * c;
  for (int j = 0; j < m; ++j) out += a[j] * right_[j];
  return out;
}

VecR ProjectionSet::Plambda(const VecR& f, int sign) const {
  require(zero_begin_ == 2, ErrorKind::precondition, "Plambda: no internal mode");
  const int k = sign > 0 ? 0 : 1;
  const double c = pair2(*space_, f, left_[k]) / pair2(*space_, right_[k], left_[k]);
  return c * right_[k];
}

VecR ProjectionSet::Pzero(const VecR& f) const {
  const int m = int(right_.size());
  VecR out = VecR::Zero(f.size());
  if (m == zero_begin_) return out;
  // the zero block is biorthogonal to the lambda modes, so its Gram block is separate
  MatR Gz(m - zero_begin_, m - zero_begin_);
  for (int i = zero_begin_; i < m; ++i)
    for (int j = zero_begin_; j < m; ++j) Gz(i - zero_begin_, j - zero_begin_) = pair2(*space_, right_[j], left_[i]);
  VecR c(m - zero_begin_);
  for (int i = zero_begin_; i < m; ++i) c[i - zero_begin_] = pair2(*space_, f, left_[i]);
  const VecR a = Gz.inverse() * c;
  for (int j = zero_begin_; j < m; ++j) out += a[j - zero_begin_] * right_[j];
  return out;
}

VecR ProjectionSet::Pplus(const VecR& f) const {
  require(box_ != nullptr, ErrorKind::precondition, "Pplus: needs a box spectrum");
  const BoxSpectrum* b = box_;
  return b->apply_real(Pc(f), [](double l) { return l > 0 ? 1.0 : 0.0; }, [b](int j) { return !b->is_bound(j); });
}

VecR ProjectionSet::Pminus(const VecR& f) const {
  require(box_ != nullptr, ErrorKind::precondition, "Pminus: needs a box spectrum");
  const BoxSpectrum* b = box_;
  return b->apply_real(Pc(f), [](double l) { return l < 0 ? 1.0 : 0.0; }, [b](int j) { return !b->is_bound(j); });
}

}  // namespace nls
