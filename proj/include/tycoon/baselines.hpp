#pragma once

// Gaussian-window STFT with hop 1 and periodic framing, and its frequency-axis
// synchrosqueezing.

#include "tycoon/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tycoon {

struct WindowSpec {
  Real sigma = 1.0;  // seconds

  void check() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ContractError("WindowSpec: sigma must be > 0");
  }
  /// Truncation half width in samples (+-4 sigma).
  [[nodiscard]] int half_width(Real dt) const { return static_cast<int>(std::ceil(4.0 * sigma / dt)); }
};

namespace detail {

struct GaussWindow {
  RealVector g;       // g(j dt), j = -H..H, unit l2 energy
  RealVector dg;      // g'(j dt) with the same scaling
  int half = 0;
};

inline GaussWindow gauss_window(const WindowSpec& w, Real dt) {
  w.check();
  GaussWindow out;
  out.half = w.half_width(dt);
  const int len = 2 * out.half + 1;
  out.g.resize(len);
  out.dg.resize(len);
  for (int j = -out.half; j <= out.half; ++j) {
    const Real x = j * dt;
    out.g(j + out.half) = std::exp(-0.5 * x * x / (w.sigma * w.sigma));
  }
  const Real scale = 1.0 / out.g.norm();
  out.g *= scale;
  for (int j = -out.half; j <= out.half; ++j) out.dg(j + out.half) = -(j * dt) / (w.sigma * w.sigma) * out.g(j + out.half);
  return out;
}

inline void require_signal_grid(const SampledSignal& f, const TFGrid& grid, const char* where) {
  f.check();
  if (f.size() != grid.num_times() || std::abs(f.dt - grid.dt) > 1e-12 * grid.dt)
    throw ContractError(std::string(where) + ": signal does not match grid " + shape_string(grid));
}

// V[n,m] = dt sum_j f[(m+j) mod (M+1)] win[j] e^{-i2pi w_n j dt}
inline ComplexMatrix windowed_transform(const SampledSignal& f, const RealVector& win, int half, const TFGrid& grid) {
  const int cols = grid.num_times();
  const int rows = grid.num_freqs();
  const int len = 2 * half + 1;
  ComplexMatrix kernel(rows, len);
  for (int j = -half; j <= half; ++j)
    for (int n = 0; n < rows; ++n)
      kernel(n, j + half) = std::polar(win(j + half) * grid.dt, -kTwoPi * grid.freq(n) * j * grid.dt);
  ComplexMatrix out(rows, cols);
  Eigen::VectorXcd seg(len);
  for (int m = 0; m < cols; ++m) {
    for (int j = -half; j <= half; ++j) {
      int idx = (m + j) % cols;
      if (idx < 0) idx += cols;
      seg(j + half) = f.samples(idx);
    }
    out.col(m).noalias() = kernel * seg;
  }
  return out;
}

}  // namespace detail

/// Gaussian-window STFT sampled on the grid. The phase is referenced to the
/// frame centre, so |V| equals the textbook STFT modulus.
inline TFMatrix stft_gauss(const SampledSignal& f, const WindowSpec& w, const TFGrid& grid) {
  detail::require_signal_grid(f, grid, "stft_gauss");
  const auto win = detail::gauss_window(w, grid.dt);
  if (2 * win.half >= grid.M)
    throw ContractError("stft_gauss: window half width " + std::to_string(win.half) + " samples does not fit M=" +
                        std::to_string(grid.M));
  return TFMatrix(grid, detail::windowed_transform(f, win.g, win.half, grid));
}

/// Default SST threshold relative to max |V|.
inline constexpr Real kSstRelativeThreshold = 1e-8;

/// Frequency reassignment of the STFT. Every coefficient with |V| > threshold
/// moves its energy |V|^2 to the bin nearest
///   w_hat = eta - Im(V_{g'} / V_g) / (2 pi),
/// clamped to [0, N dw]. Output entries have modulus sqrt(sum of moved energy)
/// and the phase of the complex sum of moved coefficients.
/// A negative threshold selects kSstRelativeThreshold * max|V|.
inline TFMatrix sst_stft(const SampledSignal& f, const WindowSpec& w, const TFGrid& grid, Real threshold = -1.0) {
  detail::require_signal_grid(f, grid, "sst_stft");
  const auto win = detail::gauss_window(w, grid.dt);
  if (2 * win.half >= grid.M)
    throw ContractError("sst_stft: window half width " + std::to_string(win.half) + " samples does not fit M=" +
                        std::to_string(grid.M));
  const ComplexMatrix V = detail::windowed_transform(f, win.g, win.half, grid);
  const ComplexMatrix Vd = detail::windowed_transform(f, win.dg, win.half, grid);
  const Real vmax = V.size() ? V.cwiseAbs().maxCoeff() : 0.0;
  const Real thr = threshold < 0.0 ? kSstRelativeThreshold * vmax : threshold;

  RealMatrix energy = RealMatrix::Zero(grid.num_freqs(), grid.num_times());
  ComplexMatrix phase_sum = ComplexMatrix::Zero(grid.num_freqs(), grid.num_times());
  for (int m = 0; m < grid.num_times(); ++m) {
    for (int n = 0; n <= grid.N; ++n) {
      const Complex v = V(n, m);
      const Real a = std::abs(v);
      if (!(a > thr) || a == 0.0) continue;
      const Real w_hat = grid.freq(n) - std::imag(Vd(n, m) / v) / kTwoPi;
      const Real pos = std::isfinite(w_hat) ? std::clamp(w_hat / grid.dw, 0.0, static_cast<Real>(grid.N)) : n;
      const int k = static_cast<int>(std::lround(pos));
      energy(k, m) += a * a;
      phase_sum(k, m) += v;
    }
  }
  TFMatrix out(grid);
  for (int m = 0; m < grid.num_times(); ++m) {
    for (int n = 0; n <= grid.N; ++n) {
      if (energy(n, m) == 0.0) continue;
      const Real mag = std::sqrt(energy(n, m));
      const Real ps = std::abs(phase_sum(n, m));
      out.values(n, m) = ps > 0.0 ? phase_sum(n, m) * (mag / ps) : Complex(mag, 0.0);
    }
  }
  return out;
}

}  // namespace tycoon
