#pragma once

// Benchmark signal generators: smoothed Brownian tracks, gIMT components,
// the two-component benchmark, SNR-controlled noise and model-constraint checks.

#include "tycoon/types.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace tycoon {

/// A(t) cos(2 pi phi(t)) restricted to the index interval [support_begin, support_end].
/// phase is in cycles.
struct GIMTComponent {
  RealVector amp;
  RealVector phase;
  int support_begin = 0;
  int support_end = -1;  // inclusive; end < begin means empty support

  [[nodiscard]] int size() const { return static_cast<int>(amp.size()); }
  [[nodiscard]] bool in_support(int m) const { return m >= support_begin && m <= support_end; }
  [[nodiscard]] int support_length() const { return std::max(0, support_end - support_begin + 1); }

  void check() const {
    if (amp.size() != phase.size()) throw ContractError("GIMTComponent: amp and phase lengths differ");
    if (support_length() > 0 && (support_begin < 0 || support_end >= size()))
      throw ContractError("GIMTComponent: support outside the sample range");
    if (!amp.allFinite() || !phase.allFinite()) throw ContractError("GIMTComponent: non-finite entries");
    for (int m = support_begin; m <= support_end; ++m) {
      if (!(amp(m) > 0.0)) throw ContractError("GIMTComponent: amplitude must be > 0 on the support");
      if (m > support_begin && !(phase(m) > phase(m - 1)))
        throw ContractError("GIMTComponent: phase must increase strictly on the support");
    }
  }
};

struct ModelParams {
  Real eps = 0.01;
  Real c1 = 0.5;
  Real c2 = 2.0;
  Real c3 = 1.0;
  Real d = 0.1;

  void check() const {
    if (!(eps >= 0.0) || !(c2 > c1 && c1 > eps) || !(c2 > c3 && c3 > eps) || !(d > 0.0))
      throw ContractError("ModelParams: need eps >= 0, c2 > c1 > eps, c2 > c3 > eps, d > 0");
  }
};

namespace detail {

inline int reflect_index(long i, int n) {
  if (n == 1) return 0;
  const long period = 2L * (n - 1);
  long r = i % period;
  if (r < 0) r += period;
  return static_cast<int>(r < n ? r : period - r);
}

inline Real max_abs(const RealVector& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

// Trapezoidal cumulative integral, starting at 0.
inline RealVector cumulative_trapezoid(const RealVector& y, Real dt) {
  RealVector out(y.size());
  if (y.size() == 0) return out;
  out(0) = 0.0;
  for (Eigen::Index i = 1; i < y.size(); ++i) out(i) = out(i - 1) + 0.5 * dt * (y(i) + y(i - 1));
  return out;
}

// Second-order central differences, one-sided first-order at the ends.
inline RealVector gradient(const RealVector& y, Real dt) {
  const Eigen::Index n = y.size();
  RealVector g(n);
  if (n < 2) return RealVector::Zero(n);
  g(0) = (y(1) - y(0)) / dt;
  g(n - 1) = (y(n - 1) - y(n - 2)) / dt;
  for (Eigen::Index i = 1; i + 1 < n; ++i) g(i) = (y(i + 1) - y(i - 1)) / (2.0 * dt);
  return g;
}

inline Real population_std(const RealVector& x) {
  if (x.size() == 0) return 0.0;
  const Real mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

}  // namespace detail

/// Normalized discrete Gaussian kernel of standard deviation sigma (samples),
/// truncated at +-4 sigma.
inline RealVector gaussian_kernel(Real sigma) {
  if (!(sigma > 0.0)) throw ContractError("gaussian_kernel: sigma must be > 0");
  const int half = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  RealVector k(2 * half + 1);
  for (int j = -half; j <= half; ++j) k(j + half) = std::exp(-0.5 * (j / sigma) * (j / sigma));
  return k / k.sum();
}

/// Brownian path (Gaussian increments of std sqrt(dt)) smoothed by a Gaussian
/// kernel of bandwidth sigma samples with reflective boundaries.
inline RealVector smoothed_brownian(int n, Real dt, Real sigma, unsigned long long seed) {
  if (n < 2) throw ContractError("smoothed_brownian: n must be >= 2");
  if (!(dt > 0.0)) throw ContractError("smoothed_brownian: dt must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> normal(0.0, std::sqrt(dt));
  RealVector w(n);
  Real acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += normal(rng);
    w(i) = acc;
  }
  const RealVector k = gaussian_kernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  RealVector out = RealVector::Zero(n);
  for (int i = 0; i < n; ++i) {
    Real s = 0.0;
    for (int j = -half; j <= half; ++j) s += k(j + half) * w(detail::reflect_index(static_cast<long>(i) + j, n));
    out(i) = s;
  }
  return out;
}

/// A1 = 1 + (Phi + |Phi|_inf) / (2 |Phi|_inf), in [1, 2].
inline RealVector amp_from_path_a1(const RealVector& phi) {
  const Real mx = detail::max_abs(phi);
  if (!(mx > 0.0)) return RealVector::Constant(phi.size(), 1.5);
  return (1.0 + (phi.array() + mx) / (2.0 * mx)).matrix();
}

inline RealVector amp_track_a1(int n, Real dt, Real sigma1, unsigned long long seed) {
  return amp_from_path_a1(smoothed_brownian(n, dt, sigma1, seed));
}

/// A2 = 1 + (Phi + 2|Phi|_inf) / (3 |Phi|_inf), in [4/3, 2].
inline RealVector amp_from_path_a2(const RealVector& phi) {
  const Real mx = detail::max_abs(phi);
  if (!(mx > 0.0)) return RealVector::Constant(phi.size(), 1.0 + 2.0 / 3.0);
  return (1.0 + (phi.array() + 2.0 * mx) / (3.0 * mx)).matrix();
}

/// Radian-scale phase pi t + int_0^t [(Phi(s) + 0.5|Phi|)/(1.5|Phi|) - sin s] ds.
/// The cycle phase used in cos(2 pi phase) is this divided by 2 pi.
inline RealVector phase_from_path_phi2(const RealVector& phi, Real dt) {
  const Real mx = detail::max_abs(phi);
  const Eigen::Index n = phi.size();
  RealVector integrand(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const Real t = m * dt;
    const Real drift = mx > 0.0 ? (phi(m) + 0.5 * mx) / (1.5 * mx) : 1.0 / 3.0;
    integrand(m) = drift - std::sin(t);
  }
  RealVector out = detail::cumulative_trapezoid(integrand, dt);
  for (Eigen::Index m = 0; m < n; ++m) out(m) += kPi * m * dt;
  return out;
}

struct AmpPhaseTracks {
  RealVector amp;
  RealVector phase;  // cycles
};

/// A2 from a sigma1 path (seed) and the cycle phase phi2/(2 pi) from a sigma2 path (seed + 1).
inline AmpPhaseTracks amp_track_a2_phi2(int n, Real dt, Real sigma1, Real sigma2, unsigned long long seed) {
  AmpPhaseTracks out;
  out.amp = amp_from_path_a2(smoothed_brownian(n, dt, sigma1, seed));
  out.phase = phase_from_path_phi2(smoothed_brownian(n, dt, sigma2, seed + 1), dt) / kTwoPi;
  return out;
}

/// samples[m] = amp[m] cos(2 pi phase[m]) on the support, 0 elsewhere.
inline SampledSignal synth_gimt(const GIMTComponent& c, Real dt) {
  c.check();
  RealVector s = RealVector::Zero(c.size());
  for (int m = std::max(0, c.support_begin); m <= c.support_end; ++m) s(m) = c.amp(m) * std::cos(kTwoPi * c.phase(m));
  return SampledSignal(std::move(s), dt);
}

/// Component with phase = cumulative trapezoid of an IF track (Hz).
inline GIMTComponent component_from_if(const RealVector& amp, const RealVector& inst_freq, Real dt, int begin,
                                       int end) {
  GIMTComponent c;
  c.amp = amp;
  c.phase = detail::cumulative_trapezoid(inst_freq, dt);
  c.support_begin = begin;
  c.support_end = end;
  return c;
}

struct BenchmarkConfig {
  Real L = 80.0;
  Real dt = 0.1;
  Real sigma1 = 100.0;
  Real sigma2 = 200.0;
  /// Bandwidth (samples) of the path driving the synthetic fast-varying IF of f1.
  Real sigma_if = 20.0;
  Real if_center = 1.2;
  Real if_spread = 0.35;
  /// f2 is active on [f2_start_fraction * L, L].
  Real f2_start_fraction = 0.25;
};

struct TwoComponentBenchmark {
  SampledSignal f;
  GIMTComponent f1;
  GIMTComponent f2;
};

/// IF track if_center + if_spread * Phi / |Phi|_inf.
inline RealVector fast_if_track(int n, Real dt, Real sigma_if, Real center, Real spread, unsigned long long seed) {
  const RealVector phi = smoothed_brownian(n, dt, sigma_if, seed);
  const Real mx = detail::max_abs(phi);
  if (!(mx > 0.0)) return RealVector::Constant(n, center);
  return (center + spread * phi.array() / mx).matrix();
}

/// f = f1 + f2. Seeds: A1 <- seed, IF of f1 <- seed + 1, A2 <- seed + 2, phi2 <- seed + 3.
inline TwoComponentBenchmark make_two_component_benchmark(const BenchmarkConfig& cfg, unsigned long long seed,
                                                          const RealVector* f1_if = nullptr) {
  if (!(cfg.dt > 0.0) || !(cfg.L > 0.0)) throw ContractError("benchmark: L and dt must be > 0");
  const Real steps = cfg.L / cfg.dt;
  const long M = std::lround(steps);
  if (std::abs(steps - static_cast<Real>(M)) > 1e-9 * std::max<Real>(1.0, steps))
    throw ContractError("benchmark: L/dt must be an integer");
  if (M < 4) throw ContractError("benchmark: need at least 5 samples");
  const int n = static_cast<int>(M) + 1;

  RealVector inst = f1_if ? *f1_if : fast_if_track(n, cfg.dt, cfg.sigma_if, cfg.if_center, cfg.if_spread, seed + 1);
  if (inst.size() != n) throw ContractError("benchmark: IF trace length must equal the sample count");
  TwoComponentBenchmark b;
  b.f1 = component_from_if(amp_track_a1(n, cfg.dt, cfg.sigma1, seed), inst, cfg.dt, 0, n - 1);

  b.f2.amp = amp_from_path_a2(smoothed_brownian(n, cfg.dt, cfg.sigma1, seed + 2));
  b.f2.phase = phase_from_path_phi2(smoothed_brownian(n, cfg.dt, cfg.sigma2, seed + 3), cfg.dt) / kTwoPi;
  b.f2.support_begin = static_cast<int>(std::ceil(cfg.f2_start_fraction * static_cast<Real>(M) - 1e-9));
  b.f2.support_end = n - 1;

  b.f = SampledSignal(synth_gimt(b.f1, cfg.dt).samples + synth_gimt(b.f2, cfg.dt).samples, cfg.dt);
  return b;
}

/// Adds white Gaussian noise rescaled so its sample std is exactly
/// std(f) * 10^(-snr_db/20). snr_db = +inf leaves f unchanged.
inline SampledSignal add_noise(const SampledSignal& f, Real snr_db, unsigned long long seed) {
  f.check();
  if (std::isinf(snr_db) && snr_db > 0.0) return f;
  if (std::isnan(snr_db)) throw ContractError("add_noise: snr_db is NaN");
  const Real sf = detail::population_std(f.samples);
  if (!(sf > 0.0)) throw ContractError("add_noise: signal has zero variance");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> normal(0.0, 1.0);
  RealVector noise(f.samples.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  noise.array() -= noise.mean();
  noise *= sf * std::pow(10.0, -snr_db / 20.0) / detail::population_std(noise);
  return SampledSignal(f.samples + noise, f.dt);
}

/// Noise std that add_noise uses for this signal and SNR.
inline Real noise_std_for_snr(const SampledSignal& f, Real snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
  return detail::population_std(f.samples) * std::pow(10.0, -snr_db / 20.0);
}

struct ConditionCheck {
  bool pass = true;
  Real worst = 0.0;  // largest violation margin seen (0 when passing)
};

struct GIMTReport {
  ConditionCheck amp_bounds;       // c1 <= A <= c2
  ConditionCheck if_bounds;        // c1 <= phi' <= c2
  ConditionCheck chirp_bound;      // |phi''| <= c3
  ConditionCheck amp_growth;       // |A'| <= eps phi'
  ConditionCheck chirp_growth;     // |phi'''| <= eps phi'
  ConditionCheck separation;       // phi'_{l+1} - phi'_l > d where supports overlap

  [[nodiscard]] bool all_pass() const {
    return amp_bounds.pass && if_bounds.pass && chirp_bound.pass && amp_growth.pass && chirp_growth.pass &&
           separation.pass;
  }
};

namespace detail {

inline void record(ConditionCheck& c, Real violation) {
  if (violation > 0.0) {
    c.pass = false;
    c.worst = std::max(c.worst, violation);
  }
}

inline void check_component(const GIMTComponent& c, const ModelParams& mp, Real dt, GIMTReport& rep) {
  const int len = c.support_length();
  if (len < 5) throw ContractError("validate_gimt: support shorter than 5 samples");
  const RealVector amp = c.amp.segment(c.support_begin, len);
  const RealVector ph = c.phase.segment(c.support_begin, len);
  const RealVector d1 = gradient(ph, dt);
  const RealVector d2 = gradient(d1, dt);
  const RealVector d3 = gradient(d2, dt);
  const RealVector da = gradient(amp, dt);
  constexpr Real tol = 1e-9;
  for (int i = 0; i < len; ++i) {
    record(rep.amp_bounds, std::max(mp.c1 - amp(i), amp(i) - mp.c2) - tol);
    record(rep.if_bounds, std::max(mp.c1 - d1(i), d1(i) - mp.c2) - tol);
    record(rep.chirp_bound, std::abs(d2(i)) - mp.c3 - tol);
    record(rep.amp_growth, std::abs(da(i)) - mp.eps * d1(i) - tol);
    record(rep.chirp_growth, std::abs(d3(i)) - mp.eps * d1(i) - tol);
  }
}

}  // namespace detail

/// Finite-difference check of the gIMT conditions and, for several components,
/// the pairwise IF separation (components ordered by mean IF).
inline GIMTReport validate_gimt(const std::vector<GIMTComponent>& comps, const ModelParams& mp, Real dt) {
  mp.check();
  if (!(dt > 0.0)) throw ContractError("validate_gimt: dt must be > 0");
  GIMTReport rep;
  std::vector<RealVector> ifs;
  std::vector<Real> mean_if;
  for (const auto& c : comps) {
    c.check();
    detail::check_component(c, mp, dt, rep);
    RealVector full = detail::gradient(c.phase, dt);
    ifs.push_back(full);
    mean_if.push_back(full.segment(c.support_begin, c.support_length()).mean());
  }
  std::vector<std::size_t> order(comps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean_if[a] < mean_if[b]; });
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const auto& lo = comps[order[k]];
    const auto& hi = comps[order[k + 1]];
    const int b = std::max(lo.support_begin, hi.support_begin);
    const int e = std::min(lo.support_end, hi.support_end);
    for (int m = b; m <= e; ++m) detail::record(rep.separation, mp.d - (ifs[order[k + 1]](m) - ifs[order[k]](m)));
  }
  return rep;
}

inline GIMTReport validate_gimt(const GIMTComponent& c, const ModelParams& mp, Real dt) {
  return validate_gimt(std::vector<GIMTComponent>{c}, mp, dt);
}

/// Natural cubic spline through (t, y), evaluated at `at`. Points outside
/// [t.front(), t.back()] are rejected.
inline RealVector natural_spline(const std::vector<Real>& t, const std::vector<Real>& y, const RealVector& at) {
  if (t.size() != y.size() || t.size() < 3) throw ContractError("natural_spline: need >= 3 matching knots");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw ContractError("natural_spline: knots must increase strictly");
  gsl_set_error_handler_off();
  std::unique_ptr<gsl_interp_accel, void (*)(gsl_interp_accel*)> acc(gsl_interp_accel_alloc(), gsl_interp_accel_free);
  std::unique_ptr<gsl_spline, void (*)(gsl_spline*)> sp(gsl_spline_alloc(gsl_interp_cspline, t.size()), gsl_spline_free);
  if (!acc || !sp || gsl_spline_init(sp.get(), t.data(), y.data(), t.size()) != GSL_SUCCESS)
    throw ContractError("natural_spline: spline construction failed");
  RealVector out(at.size());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    const Real x = at(i);
    if (x < t.front() - 1e-12 || x > t.back() + 1e-12)
      throw ContractError("natural_spline: evaluation point " + std::to_string(x) + " outside the trace");
    out(i) = gsl_spline_eval(sp.get(), std::clamp(x, t.front(), t.back()), acc.get());
  }
  return out;
}

}  // namespace tycoon
