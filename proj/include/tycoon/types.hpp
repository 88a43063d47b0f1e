#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tycoon {

using Real = double;
using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTwoPi = 2.0 * kPi;

/// Raised when an input violates a documented precondition (shape, range,
/// normalization). The CLI maps it to exit code 2.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver cannot continue (non-finite iterates,
/// non-positive Lipschitz constant). The CLI maps it to exit code 1.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete time/frequency lattice. Times t_m = m*dt for m = 0..M and
/// frequencies w_n = n*dw for n = 0..N, with dw = 1/(M*dt), N = ceil(M/2).
struct TFGrid {
  int M = 0;
  int N = 0;
  Real dt = 0.0;
  Real dw = 0.0;

  [[nodiscard]] int num_times() const { return M + 1; }
  [[nodiscard]] int num_freqs() const { return N + 1; }
  [[nodiscard]] Real time(int m) const { return m * dt; }
  [[nodiscard]] Real freq(int n) const { return n * dw; }
  [[nodiscard]] Real nyquist() const { return N * dw; }

  friend bool operator==(const TFGrid&, const TFGrid&) = default;
};

inline TFGrid make_grid(int M, Real dt) {
  if (M < 4) throw ContractError("make_grid: M must be >= 4, got " + std::to_string(M));
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractError("make_grid: dt must be positive and finite");
  TFGrid g;
  g.M = M;
  g.N = (M + 1) / 2;
  g.dt = dt;
  g.dw = 1.0 / (static_cast<Real>(M) * dt);
  return g;
}

inline std::string shape_string(const TFGrid& g) {
  return std::to_string(g.num_freqs()) + "x" + std::to_string(g.num_times());
}

/// Positive-frequency time-frequency representation. Row n holds frequency
/// w_n, column m holds time t_m. The negative half is implied by Hermitian
/// symmetry and never stored.
struct TFMatrix {
  TFGrid grid;
  ComplexMatrix values;

  TFMatrix() = default;
  explicit TFMatrix(const TFGrid& g) : grid(g), values(ComplexMatrix::Zero(g.num_freqs(), g.num_times())) {}
  TFMatrix(const TFGrid& g, ComplexMatrix v) : grid(g), values(std::move(v)) { check(); }

  void check() const {
    if (values.rows() != grid.num_freqs() || values.cols() != grid.num_times())
      throw ContractError("TFMatrix: values are " + std::to_string(values.rows()) + "x" +
                          std::to_string(values.cols()) + " but grid expects " + shape_string(grid));
  }

  [[nodiscard]] bool all_finite() const { return values.allFinite(); }
  [[nodiscard]] Real norm() const { return values.norm(); }
};

/// Per-time chirp factor estimate (Hz per second).
struct ChirpTrack {
  RealVector values;

  ChirpTrack() = default;
  explicit ChirpTrack(RealVector v) : values(std::move(v)) {}
  static ChirpTrack zeros(const TFGrid& g) { return ChirpTrack(RealVector::Zero(g.num_times())); }
};

/// Uniformly sampled real signal.
struct SampledSignal {
  RealVector samples;
  Real dt = 0.0;

  SampledSignal() = default;
  SampledSignal(RealVector s, Real step) : samples(std::move(s)), dt(step) {}

  [[nodiscard]] int size() const { return static_cast<int>(samples.size()); }

  void check() const {
    if (samples.size() < 5) throw ContractError("SampledSignal: need at least 5 samples");
    if (!(dt > 0.0)) throw ContractError("SampledSignal: dt must be positive");
    if (!samples.allFinite()) throw ContractError("SampledSignal: non-finite sample");
  }

  /// The grid whose time axis matches these samples.
  [[nodiscard]] TFGrid grid() const {
    check();
    return make_grid(size() - 1, dt);
  }
};

enum class DerivMethod { spectral, finite_difference };

/// Hyperparameters of the alternating solver. The working weights are
/// mu = mu_tilde*lambda_tilde (transport) and lambda = mu_tilde*(1-lambda_tilde) (sparsity).
struct TycoonParams {
  std::vector<Real> mu_schedule;
  Real lambda_tilde = 0.5;
  Real gamma = 1e-3;
  Real eps1 = 5e-4;
  Real eps2 = 5e-4;
  int max_inner_iters = 300;
  int max_outer_iters = 20;
  /// The eps1 test is not applied before this many inner iterations.
  int min_inner_iters = 20;
  DerivMethod deriv_method = DerivMethod::spectral;
  int power_iters = 30;
  unsigned long long power_seed = 12345;

  [[nodiscard]] Real transport_weight(Real mu_tilde) const { return mu_tilde * lambda_tilde; }
  [[nodiscard]] Real sparsity_weight(Real mu_tilde) const { return mu_tilde * (1.0 - lambda_tilde); }

  void check() const {
    if (mu_schedule.empty()) throw ContractError("TycoonParams: empty mu schedule");
    for (std::size_t i = 0; i < mu_schedule.size(); ++i) {
      if (!(mu_schedule[i] > 0.0)) throw ContractError("TycoonParams: mu schedule entries must be > 0");
      if (i > 0 && !(mu_schedule[i] < mu_schedule[i - 1]))
        throw ContractError("TycoonParams: mu schedule must be strictly decreasing");
    }
    if (!(lambda_tilde >= 0.0 && lambda_tilde <= 1.0)) throw ContractError("TycoonParams: lambda_tilde outside [0,1]");
    if (!(gamma > 0.0)) throw ContractError("TycoonParams: gamma must be > 0");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw ContractError("TycoonParams: stopping values must be > 0");
    if (max_inner_iters < 1 || max_outer_iters < 1) throw ContractError("TycoonParams: iteration caps must be >= 1");
    if (min_inner_iters < 1 || min_inner_iters > max_inner_iters)
      throw ContractError("TycoonParams: min_inner_iters must be in [1, max_inner_iters]");
    if (power_iters < 20) throw ContractError("TycoonParams: power_iters must be >= 20");
  }
};

/// K values spaced uniformly on a log scale from hi down to lo.
inline std::vector<Real> log_schedule(Real hi, Real lo, int K) {
  if (!(hi > 0.0) || !(lo > 0.0) || !(hi > lo) || K < 1)
    throw ContractError("log_schedule: need hi > lo > 0 and K >= 1");
  std::vector<Real> out(static_cast<std::size_t>(K));
  if (K == 1) {
    out[0] = hi;
    return out;
  }
  const Real a = std::log(hi), b = std::log(lo);
  for (int k = 0; k < K; ++k) out[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (K - 1));
  return out;
}

/// Default continuation: K stages spanning [hi_factor, lo_factor] * |f|^2 dt.
inline std::vector<Real> default_mu_schedule(const SampledSignal& f, int K = 4, Real hi_factor = 1e-2,
                                             Real lo_factor = 1e-5) {
  const Real energy = f.samples.squaredNorm() * f.dt;
  if (!(energy > 0.0)) return {1.0};
  return log_schedule(hi_factor * energy, lo_factor * energy, K);
}

/// Real inner product Re sum x conj(y) on the complex matrix space.
inline Real inner(const ComplexMatrix& x, const ComplexMatrix& y) {
  return (x.array() * y.array().conjugate()).real().sum();
}

inline Real inner(const TFMatrix& x, const TFMatrix& y) { return inner(x.values, y.values); }

/// Relative change |a - b| / |b| with the zero-denominator guard: when both
/// numerator and denominator are tiny the ratio is taken as 0.
inline Real relative_change(Real diff_norm, Real ref_norm) {
  if (diff_norm < 1e-14 && ref_norm < 1e-14) return 0.0;
  return diff_norm / (ref_norm + 1e-30);
}

}  // namespace tycoon
