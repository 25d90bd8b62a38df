#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <complex>
#include <stdexcept>
#include <string>

namespace nls {

using cplx = std::complex<double>;

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using VecR = Vec<double>;
using VecC = Vec<cplx>;
using MatR = Mat<double>;
using MatC = Mat<cplx>;
template <class S>
using SpMat = Eigen::SparseMatrix<S>;
using SpMatR = SpMat<double>;
using SpMatC = SpMat<cplx>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;

enum class ErrorKind {
  invalid_argument,
  singular_point,
  no_ground_state,
  family_break,
  precondition,
  numerical_failure,
  resonance_violation,
  threshold,
  threshold_or_resonance,
  limiting_absorption_failure,
  inconsistent_fgr,
  solvability_failure,
  unsupported_nonlinearity,
  stiffness,
  outside_tube,
  conditioning_failure,
  bookkeeping,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool cond, ErrorKind k, const std::string& msg) {
  if (!cond) fail(k, msg);
}

// Two-component radial fields are stored stacked: [first; second], each of
// length n. These helpers keep the Pauli algebra readable at call sites.
template <class Derived>
Vec<typename Derived::Scalar> sigma1(const Eigen::MatrixBase<Derived>& f) {
  const Eigen::Index n = f.size() / 2;
  Vec<typename Derived::Scalar> out(f.size());
  out << f.tail(n), f.head(n);
  return out;
}

template <class Derived>
Vec<typename Derived::Scalar> sigma3(const Eigen::MatrixBase<Derived>& f) {
  const Eigen::Index n = f.size() / 2;
  Vec<typename Derived::Scalar> out(f.size());
  out << f.head(n), -f.tail(n);
  return out;
}

template <class D1, class D2>
Vec<typename D1::Scalar> stack(const Eigen::MatrixBase<D1>& a, const Eigen::MatrixBase<D2>& b) {
  Vec<typename D1::Scalar> out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace nls
