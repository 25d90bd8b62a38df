#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "nls/groundstate.hpp"
#include "oracles.hpp"

using namespace nls;

TEST_CASE("cubic ground state at omega = 1 against the shooting oracle") {
  const auto beta = NonlinearitySpec::cubic();
  const RadialProfile p = solve_ground_state(beta, 1.0);
  const auto ref = oracle::shooting_ground_state({0.0, 1.0}, 1.0, 1.0, 4.0);
  CHECK(p.phi0 == doctest::Approx(ref.phi0).epsilon(1e-8));
  CHECK(p.mass == doctest::Approx(ref.mass).epsilon(1e-5));
  CHECK(p.mass == doctest::Approx(11.7009).epsilon(1e-4));
  CHECK(p.residual < 1e-8);
  CHECK(pohozaev_residual(p, beta) < 1e-6);
  CHECK(jordan_seed_residual(p, beta) < 1e-7);
  CHECK(tail_slope(p) == doctest::Approx(-1.0).epsilon(2e-3));
}

TEST_CASE("cubic-quintic ground state against the shooting oracle") {
  const auto beta = NonlinearitySpec::cubic_quintic(1.0, -0.05);
  for (double omega : {0.3, 0.8}) {
    const RadialProfile p = solve_ground_state(beta, omega);
    const auto ref = oracle::shooting_ground_state({0.0, 1.0, -0.05}, omega, 0.1, 4.4);
    CHECK(p.phi0 == doctest::Approx(ref.phi0).epsilon(1e-7));
    CHECK(p.mass == doctest::Approx(ref.mass).epsilon(1e-5));
    CHECK(pohozaev_residual(p, beta) < 1e-6);
  }
}

TEST_CASE("cubic scaling law phi_omega(r) = sqrt(omega) phi_1(sqrt(omega) r)") {
  const auto beta = NonlinearitySpec::cubic();
  const RadialProfile p1 = solve_ground_state(beta, 1.0);
  for (double omega : {4.0, 2.25}) {
    const RadialProfile pw = solve_ground_state(beta, omega);
    const double s = std::sqrt(omega);
    double worst = 0;
    for (double r = 0; r < 8; r += 0.01) worst = std::max(worst, std::abs(pw.eval(r) - s * p1.eval(s * r)));
    CHECK(worst < 1e-7);
    // mass is omega-independent for the cubic case
    CHECK(pw.mass == doctest::Approx(p1.mass).epsilon(1e-9));
  }
}

TEST_CASE("H4 verdicts: cubic degenerate, cubic-quintic pass") {
  const SolitonFamily cubic = continue_family(NonlinearitySpec::cubic(), 0.5, 2.0, 6);
  for (const auto& r : check_h4(cubic)) {
    CHECK(r.verdict == H4Verdict::degenerate);
    CHECK(std::abs(r.slope_pair) < 1e-6);
  }
  const SolitonFamily cq = continue_family(NonlinearitySpec::cubic_quintic(1, -0.05), 0.3, 1.0, 8);
  for (const auto& r : check_h4(cq)) {
    CHECK(r.verdict == H4Verdict::pass);
    // the pairing slope and the finite-difference slope of the mass curve agree
    CHECK(r.slope_pair == doctest::Approx(r.slope_fd).epsilon(2e-2));
  }
}

TEST_CASE("L+ has exactly one negative eigenvalue; inertia count matches a dense solve") {
  GroundStateOptions go;
  go.r_max = 16;
  go.n = 256;
  for (const auto& beta : {NonlinearitySpec::cubic(), NonlinearitySpec::cubic_quintic(1, -0.05)}) {
    for (double omega : {0.5, 1.0}) {
      const RadialProfile p = solve_ground_state(beta, omega, go);
      const LplusCount c = count_negative_eigs_Lplus(p, beta);
      CHECK(c.negative == 1);
      const MatR L(lplus_matrix(p, beta)), M(p.space->mass());
      Eigen::GeneralizedSelfAdjointEigenSolver<MatR> es(L, M, Eigen::EigenvaluesOnly);
      int neg = 0;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) neg += es.eigenvalues()[i] < 0;
      CHECK(neg == c.negative);
      CHECK(c.smallest == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-8));
    }
  }
}

TEST_CASE("no ground state when the nonlinearity saturates below omega") {
  // beta(s) = s - 0.1 s^2 has max 2.5; ground states need omega below the plateau
  bool threw = false;
  try {
    solve_ground_state(NonlinearitySpec::cubic_quintic(1, -0.1), 2.0);
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::no_ground_state;
  }
  CHECK(threw);
}

TEST_CASE("nonlinearity spec validation and antiderivative") {
  const auto b = NonlinearitySpec::cubic_quintic(1, -0.05);
  for (double s : {0.0, 0.3, 2.0}) {
    const double h = 1e-5;
    CHECK((b.B(s + h) - b.B(s - h)) / (2 * h) == doctest::Approx(b.beta(s)).epsilon(1e-8));
    CHECK((b.beta(s + h) - b.beta(s - h)) / (2 * h) == doctest::Approx(b.dbeta(s)).epsilon(1e-8));
  }
  bool threw = false;
  try {
    NonlinearitySpec::polynomial({1.0, 1.0}).validate();
  } catch (const Error&) {
    threw = true;
  }
  CHECK(threw);
}

TEST_CASE("family continuation: cubic mass constant, cubic-quintic mass increasing") {
  const SolitonFamily cubic = continue_family(NonlinearitySpec::cubic(), 0.5, 2.0, 16);
  REQUIRE(cubic.members.size() == 17);
  const auto mc = cubic.mass();
  for (double m : mc) CHECK(std::abs(m - mc.front()) < 1e-6 * mc.front());
  const SolitonFamily cq = continue_family(NonlinearitySpec::cubic_quintic(1, -0.05), 0.2, 1.0, 16);
  const auto mq = cq.mass();
  for (size_t i = 1; i < mq.size(); ++i) CHECK(mq[i] > mq[i - 1]);
  // independently solved endpoints reproduce the finite-difference slope sign
  const double m_lo = solve_ground_state(NonlinearitySpec::cubic_quintic(1, -0.05), 0.5).mass;
  const double m_hi = solve_ground_state(NonlinearitySpec::cubic_quintic(1, -0.05), 0.55).mass;
  CHECK(m_hi > m_lo);

  const SolitonFamily two = continue_family(NonlinearitySpec::cubic(), 1.0, 1.5, 1);
  CHECK(two.members.size() == 2);
  bool threw = false;
  try {
    check_h4(two);
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::precondition;
  }
  CHECK(threw);
}

TEST_CASE("zero nonlinearity: L+ is positive") {
  const auto sp = make_space(16, 256);
  const RadialProfile z = zero_profile(1.0, sp);
  CHECK(count_negative_eigs_Lplus(z, NonlinearitySpec::zero()).negative == 0);
}
