#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include <array>

namespace mfopf::ad {

// Forward-mode derivatives of small element functions. An element function
// is any callable f(const std::array<T, N>& in, std::array<T, M>& out)
// templated on the scalar T.

template <int N>
using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;

/// Second-order dual: derivatives of a first-order dual.
template <int N>
using Dual2 = Eigen::AutoDiffScalar<Eigen::Matrix<Dual<N>, N, 1>>;

template <int N, int M, class F>
void evaluate(const F& f, const std::array<double, N>& x, std::array<double, M>& y) {
  f(x, y);
}

/// Values and Jacobian of f at x.
template <int N, int M, class F>
void jacobian(const F& f, const std::array<double, N>& x, std::array<double, M>& y,
              Eigen::Matrix<double, M, N>& jac) {
  std::array<Dual<N>, N> in;
  for (int i = 0; i < N; ++i) in[i] = Dual<N>(x[i], N, i);
  std::array<Dual<N>, M> out;
  f(in, out);
  for (int k = 0; k < M; ++k) {
    y[k] = out[k].value();
    jac.row(k) = out[k].derivatives().transpose();
  }
}

/// Sum over outputs of weight[k] times the Hessian of output k.
template <int N, int M, class F>
Eigen::Matrix<double, N, N> weighted_hessian(const F& f, const std::array<double, N>& x,
                                             const std::array<double, M>& weight) {
  std::array<Dual2<N>, N> in;
  for (int i = 0; i < N; ++i) {
    Eigen::Matrix<Dual<N>, N, 1> seed;
    for (int k = 0; k < N; ++k) seed[k] = Dual<N>(k == i ? 1.0 : 0.0);
    in[i] = Dual2<N>(Dual<N>(x[i], N, i), seed);
  }
  std::array<Dual2<N>, M> out;
  f(in, out);
  Eigen::Matrix<double, N, N> h = Eigen::Matrix<double, N, N>::Zero();
  for (int k = 0; k < M; ++k) {
    if (weight[k] == 0.0) continue;
    for (int a = 0; a < N; ++a) h.row(a) += weight[k] * out[k].derivatives()[a].derivatives().transpose();
  }
  return h;
}

}  // namespace mfopf::ad
