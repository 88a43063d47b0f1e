#pragma once

// Linear operators on positive-frequency TF matrices and the smooth part of
// the Tycoon functional.
//
//   A F      = 2 dw Re(1^T F)                        (reconstruction)
//   B_a F    = d_t F - i2pi W F + D_w F diag(a)      (transport residual)
//
// Every adjoint below is the exact discrete adjoint of the implemented
// forward map under <X, Y> = Re sum X conj(Y).

#include "tycoon/fft.hpp"
#include "tycoon/types.hpp"

#include <string>

namespace tycoon {

namespace detail {

inline void require_same_grid(const TFGrid& a, const TFGrid& b, const char* where) {
  if (!(a == b)) throw ContractError(std::string(where) + ": grid mismatch " + shape_string(a) + " vs " + shape_string(b));
}

inline void require_length(Eigen::Index got, int want, const char* where) {
  if (got != want)
    throw ContractError(std::string(where) + ": expected length " + std::to_string(want) + ", got " +
                        std::to_string(got));
}

// Multiplies the time spectrum of every row by i*2*pi*xi_k (sign = +1) and
// returns to the time domain.
inline ComplexMatrix spectral_time_derivative(const ComplexMatrix& x, Real dt) {
  ComplexMatrix y = x;
  fft::forward_rows(y);
  const int len = static_cast<int>(y.cols());
  Eigen::VectorXcd mult(len);
  for (int k = 0; k < len; ++k) mult(k) = Complex(0.0, kTwoPi * fft::bin_frequency(k, len, dt) / static_cast<Real>(len));
  y = y * mult.asDiagonal();
  fft::backward_rows(y);
  return y;
}

// Forward differences along time, backward difference in the last column.
inline ComplexMatrix fd_time_derivative(const ComplexMatrix& x, Real dt) {
  const Eigen::Index cols = x.cols();
  ComplexMatrix y(x.rows(), cols);
  for (Eigen::Index m = 0; m + 1 < cols; ++m) y.col(m) = (x.col(m + 1) - x.col(m)) / dt;
  y.col(cols - 1) = (x.col(cols - 1) - x.col(cols - 2)) / dt;
  return y;
}

// Transpose of fd_time_derivative's matrix.
inline ComplexMatrix fd_time_derivative_adj(const ComplexMatrix& g, Real dt) {
  const Eigen::Index cols = g.cols();
  ComplexMatrix y = ComplexMatrix::Zero(g.rows(), cols);
  for (Eigen::Index m = 0; m + 1 < cols; ++m) {
    y.col(m + 1) += g.col(m) / dt;
    y.col(m) -= g.col(m) / dt;
  }
  y.col(cols - 1) += g.col(cols - 1) / dt;
  y.col(cols - 2) -= g.col(cols - 1) / dt;
  return y;
}

}  // namespace detail

/// Reconstruction operator: result[m] = 2 dw sum_n Re F[n,m].
inline RealVector op_A(const TFMatrix& F) {
  F.check();
  return 2.0 * F.grid.dw * F.values.real().colwise().sum().transpose();
}

/// Adjoint of op_A: every row equals 2 dw g.
inline TFMatrix op_A_adj(const RealVector& g, const TFGrid& grid) {
  detail::require_length(g.size(), grid.num_times(), "op_A_adj");
  TFMatrix out(grid);
  out.values.rowwise() = (2.0 * grid.dw * g).cast<Complex>().transpose();
  return out;
}

/// Time derivative of every frequency row.
inline TFMatrix d_t(const TFMatrix& F, DerivMethod method = DerivMethod::spectral) {
  F.check();
  if (method == DerivMethod::spectral)
    return TFMatrix(F.grid, detail::spectral_time_derivative(F.values, F.grid.dt));
  return TFMatrix(F.grid, detail::fd_time_derivative(F.values, F.grid.dt));
}

/// Exact adjoint of d_t. The spectral derivative is skew-adjoint.
inline TFMatrix d_t_adj(const TFMatrix& G, DerivMethod method = DerivMethod::spectral) {
  G.check();
  if (method == DerivMethod::spectral)
    return TFMatrix(G.grid, -detail::spectral_time_derivative(G.values, G.grid.dt));
  return TFMatrix(G.grid, detail::fd_time_derivative_adj(G.values, G.grid.dt));
}

/// Frequency derivative D_w F: second-order central differences in the
/// interior, one-sided second-order stencils at n = 0 and n = N.
inline TFMatrix d_omega(const TFMatrix& F) {
  F.check();
  const int N = F.grid.N;
  if (N < 2) throw ContractError("d_omega: need N >= 2");
  const Real inv = 1.0 / (2.0 * F.grid.dw);
  TFMatrix out(F.grid);
  for (Eigen::Index m = 0; m < F.values.cols(); ++m) {
    const Complex* x = F.values.col(m).data();
    Complex* y = out.values.col(m).data();
    y[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) * inv;
    for (int n = 1; n < N; ++n) y[n] = (x[n + 1] - x[n - 1]) * inv;
    y[N] = (3.0 * x[N] - 4.0 * x[N - 1] + x[N - 2]) * inv;
  }
  return out;
}

/// D_w^T G, the transpose of the d_omega stencil matrix.
inline TFMatrix d_omega_adj(const TFMatrix& G) {
  G.check();
  const int N = G.grid.N;
  if (N < 2) throw ContractError("d_omega_adj: need N >= 2");
  const Real inv = 1.0 / (2.0 * G.grid.dw);
  TFMatrix out(G.grid);
  for (Eigen::Index m = 0; m < G.values.cols(); ++m) {
    const Complex* g = G.values.col(m).data();
    Complex* y = out.values.col(m).data();
    y[0] += -3.0 * g[0] * inv;
    y[1] += 4.0 * g[0] * inv;
    y[2] += -g[0] * inv;
    for (int n = 1; n < N; ++n) {
      y[n + 1] += g[n] * inv;
      y[n - 1] -= g[n] * inv;
    }
    y[N] += 3.0 * g[N] * inv;
    y[N - 1] += -4.0 * g[N] * inv;
    y[N - 2] += g[N] * inv;
  }
  return out;
}

/// out += sign * i 2 pi W x, with W = diag(w_0..w_N) acting on rows.
inline void add_scaled_frequency_phase(ComplexMatrix& out, const ComplexMatrix& x, const TFGrid& grid, Real sign) {
  Eigen::VectorXcd w(grid.num_freqs());
  for (int n = 0; n <= grid.N; ++n) w(n) = Complex(0.0, sign * kTwoPi * grid.freq(n));
  out.noalias() += w.asDiagonal() * x;
}

/// Transport residual B_a F = d_t F - i2pi W F + D_w F diag(a).
inline TFMatrix op_B(const TFMatrix& F, const ChirpTrack& alpha, DerivMethod method = DerivMethod::spectral) {
  F.check();
  detail::require_length(alpha.values.size(), F.grid.num_times(), "op_B");
  TFMatrix out = d_t(F, method);
  add_scaled_frequency_phase(out.values, F.values, F.grid, -1.0);
  if (!alpha.values.isZero(0.0)) out.values += d_omega(F).values * alpha.values.asDiagonal();
  return out;
}

/// Exact adjoint B_a^* G = d_t^* G + i2pi W G + D_w^T G diag(a).
inline TFMatrix op_B_adj(const TFMatrix& G, const ChirpTrack& alpha, DerivMethod method = DerivMethod::spectral) {
  G.check();
  detail::require_length(alpha.values.size(), G.grid.num_times(), "op_B_adj");
  TFMatrix out = d_t_adj(G, method);
  add_scaled_frequency_phase(out.values, G.values, G.grid, +1.0);
  if (!alpha.values.isZero(0.0)) {
    TFMatrix scaled(G.grid, G.values * alpha.values.asDiagonal());
    out.values += d_omega_adj(scaled).values;
  }
  return out;
}

/// sum |x_ij|
inline Real l1_norm(const ComplexMatrix& x) { return x.cwiseAbs2().cwiseSqrt().sum(); }

/// The four terms of the discretized functional and their sum.
struct FunctionalValue {
  Real total = 0.0;
  Real data_term = 0.0;
  Real transport_term = 0.0;
  Real l1_term = 0.0;
  Real alpha_term = 0.0;

  [[nodiscard]] Real smooth() const { return data_term + transport_term; }
};

/// H(F, a) = dt |A F - f|^2 + mu dt dw |B_a F|^2 + lambda dt dw sum|F| + gamma dt |a|^2
/// with mu = mu_tilde * lambda_tilde and lambda = mu_tilde * (1 - lambda_tilde).
inline FunctionalValue eval_H(const TFMatrix& F, const ChirpTrack& alpha, const SampledSignal& f,
                              const TycoonParams& p, Real mu_tilde) {
  detail::require_length(f.samples.size(), F.grid.num_times(), "eval_H");
  const TFGrid& g = F.grid;
  const Real cell = g.dt * g.dw;
  FunctionalValue h;
  h.data_term = g.dt * (op_A(F) - f.samples).squaredNorm();
  const Real mu = p.transport_weight(mu_tilde);
  if (mu != 0.0) h.transport_term = mu * cell * op_B(F, alpha, p.deriv_method).values.squaredNorm();
  h.l1_term = p.sparsity_weight(mu_tilde) * cell * l1_norm(F.values);
  h.alpha_term = p.gamma * g.dt * alpha.values.squaredNorm();
  h.total = h.data_term + h.transport_term + h.l1_term + h.alpha_term;
  return h;
}

/// Gradient of the smooth part: 2 dt A^*(A F - f) + 2 dt dw mu B^* B F.
inline TFMatrix grad_smooth(const TFMatrix& F, const ChirpTrack& alpha, const SampledSignal& f, Real mu,
                            DerivMethod method = DerivMethod::spectral) {
  detail::require_length(f.samples.size(), F.grid.num_times(), "grad_smooth");
  if (mu < 0.0) throw ContractError("grad_smooth: mu must be >= 0");
  const TFGrid& g = F.grid;
  TFMatrix out = op_A_adj(2.0 * g.dt * (op_A(F) - f.samples), g);
  if (mu != 0.0) out.values += (2.0 * g.dt * g.dw * mu) * op_B_adj(op_B(F, alpha, method), alpha, method).values;
  return out;
}

}  // namespace tycoon
