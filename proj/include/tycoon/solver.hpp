#pragma once

#include "tycoon/operators.hpp"
#include "tycoon/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tycoon {

struct PowerIterationResult {
  Real eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a self-adjoint positive semidefinite map by power
/// iteration from x0. Stops when successive Rayleigh quotients agree to tol.
template <class ApplyFn>
PowerIterationResult power_iteration(ApplyFn&& apply, ComplexMatrix x, int iters, Real tol = 1e-10) {
  PowerIterationResult res;
  Real nx = x.norm();
  if (nx == 0.0) return res;
  x /= nx;
  Real previous = 0.0;
  for (int k = 0; k < iters; ++k) {
    ComplexMatrix y = apply(x);
    const Real rq = inner(x, y);
    const Real ny = y.norm();
    res.eigenvalue = rq;
    res.iterations = k + 1;
    if (ny == 0.0) {
      res.eigenvalue = 0.0;
      res.converged = true;
      return res;
    }
    if (k > 0 && std::abs(rq - previous) <= tol * std::abs(rq)) {
      res.converged = true;
      return res;
    }
    previous = rq;
    x = y / ny;
  }
  return res;
}

/// Hessian of the smooth part: F -> 2 dt A^*A F + 2 dt dw mu B_a^* B_a F.
inline TFMatrix smooth_hessian_apply(const TFMatrix& F, const ChirpTrack& alpha, Real mu,
                                     DerivMethod method = DerivMethod::spectral) {
  const TFGrid& g = F.grid;
  TFMatrix out = op_A_adj(2.0 * g.dt * op_A(F), g);
  if (mu != 0.0) out.values += (2.0 * g.dt * g.dw * mu) * op_B_adj(op_B(F, alpha, method), alpha, method).values;
  return out;
}

struct LipschitzEstimate {
  Real L = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline constexpr Real kLipschitzSafety = 1.05;

/// Lipschitz constant of the smooth gradient, inflated by kLipschitzSafety.
/// A non-converged estimate returns the last Rayleigh quotient with converged = false.
inline LipschitzEstimate estimate_lipschitz(const ChirpTrack& alpha, const TFGrid& grid, Real mu, int iters,
                                            unsigned long long seed,
                                            DerivMethod method = DerivMethod::spectral) {
  if (iters < 20) throw ContractError("estimate_lipschitz: iters must be >= 20");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> normal(0.0, 1.0);
  ComplexMatrix x0(grid.num_freqs(), grid.num_times());
  for (Eigen::Index j = 0; j < x0.cols(); ++j)
    for (Eigen::Index i = 0; i < x0.rows(); ++i) x0(i, j) = Complex(normal(rng), normal(rng));
  auto apply = [&](const ComplexMatrix& x) {
    return smooth_hessian_apply(TFMatrix(grid, x), alpha, mu, method).values;
  };
  const auto pr = power_iteration(apply, std::move(x0), iters);
  return {kLipschitzSafety * pr.eigenvalue, pr.iterations, pr.converged};
}

/// Complex soft-thresholding: magnitudes shrink by tau, phases are kept.
inline TFMatrix prox_l1(const TFMatrix& F, Real tau) {
  if (tau < 0.0) throw ContractError("prox_l1: tau must be >= 0");
  TFMatrix out(F.grid);
  for (Eigen::Index j = 0; j < F.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < F.values.rows(); ++i) {
      const Complex v = F.values(i, j);
      const Real a = std::sqrt(std::norm(v));
      out.values(i, j) = (a > tau) ? v * ((a - tau) / a) : Complex(0.0, 0.0);
    }
  }
  return out;
}

struct FistaResult {
  TFMatrix F;
  int iterations = 0;
  bool converged = false;
  Real lipschitz = 0.0;
  FunctionalValue value;
  /// H at the start and after every iteration (accepted iterates only, so non-increasing).
  std::vector<Real> objective;
};

/// Monotone FISTA on F -> H(F, alpha) with fixed step 1/L.
///
/// B z and A z are carried as linear combinations of the cached B F_k,
/// B F_{k+1/2} (and likewise for A), so one iteration costs one forward and
/// one adjoint application of B.
inline FistaResult fista(const TFMatrix& F0, const ChirpTrack& alpha, const SampledSignal& f, const TycoonParams& p,
                         Real mu_tilde, Real L) {
  F0.check();
  detail::require_length(f.samples.size(), F0.grid.num_times(), "fista");
  if (!(L > 0.0) || !std::isfinite(L)) throw SolverError("fista: Lipschitz constant must be positive, got " + std::to_string(L));
  const TFGrid& g = F0.grid;
  const Real cell = g.dt * g.dw;
  const Real mu = p.transport_weight(mu_tilde);
  const Real lambda = p.sparsity_weight(mu_tilde);
  const Real threshold = lambda * cell / L;
  const Real alpha_term = p.gamma * g.dt * alpha.values.squaredNorm();
  const bool transport = mu != 0.0;
  const DerivMethod method = p.deriv_method;

  auto value_of = [&](const TFMatrix& F, const RealVector& AF, const ComplexMatrix& BF) {
    FunctionalValue h;
    h.data_term = g.dt * (AF - f.samples).squaredNorm();
    h.transport_term = transport ? mu * cell * BF.squaredNorm() : 0.0;
    h.l1_term = lambda * cell * l1_norm(F.values);
    h.alpha_term = alpha_term;
    h.total = h.data_term + h.transport_term + h.l1_term + h.alpha_term;
    return h;
  };
  auto apply_B = [&](const TFMatrix& F) {
    return transport ? op_B(F, alpha, method).values : ComplexMatrix();
  };

  FistaResult res;
  res.lipschitz = L;
  TFMatrix Fk = F0;
  RealVector AFk = op_A(Fk);
  ComplexMatrix BFk = apply_B(Fk);
  FunctionalValue Hk = value_of(Fk, AFk, BFk);
  TFMatrix z = Fk;
  RealVector Az = AFk;
  ComplexMatrix Bz = BFk;
  res.objective.push_back(Hk.total);

  for (int k = 0; k < p.max_inner_iters; ++k) {
    TFMatrix grad = op_A_adj(2.0 * g.dt * (Az - f.samples), g);
    if (transport) grad.values += (2.0 * cell * mu) * op_B_adj(TFMatrix(g, Bz), alpha, method).values;
    TFMatrix half(g, z.values - grad.values / L);
    half = prox_l1(half, threshold);
    if (!half.all_finite())
      throw SolverError("fista: non-finite iterate at inner iteration " + std::to_string(k) + " (mu_tilde=" +
                        std::to_string(mu_tilde) + ", L=" + std::to_string(L) + ")");
    RealVector Ahalf = op_A(half);
    ComplexMatrix Bhalf = apply_B(half);
    const FunctionalValue Hhalf = value_of(half, Ahalf, Bhalf);
    const bool accept = Hhalf.total < Hk.total;
    const Real change = relative_change((half.values - Fk.values).norm(), Fk.norm());

    const Real b = static_cast<Real>(k + 1) / (k + 2);
    if (accept) {
      // z = F_{k+1} + k/(k+2) (F_{k+1} - F_k) + (k+1)/(k+2) (F_{k+1/2} - F_k) with F_{k+1} = F_{k+1/2}
      const Real c = static_cast<Real>(k) / (k + 2) + b;
      z.values = (1.0 + c) * half.values - c * Fk.values;
      Az = (1.0 + c) * Ahalf - c * AFk;
      if (transport) Bz = (1.0 + c) * Bhalf - c * BFk;
      Fk = std::move(half);
      AFk = std::move(Ahalf);
      BFk = std::move(Bhalf);
      Hk = Hhalf;
    } else {
      z.values = (1.0 - b) * Fk.values + b * half.values;
      Az = (1.0 - b) * AFk + b * Ahalf;
      if (transport) Bz = (1.0 - b) * BFk + b * Bhalf;
    }
    res.objective.push_back(Hk.total);
    res.iterations = k + 1;
    if (res.iterations >= p.min_inner_iters && change <= p.eps1) {
      res.converged = true;
      break;
    }
  }
  res.F = std::move(Fk);
  res.value = Hk;
  return res;
}

/// Closed-form chirp update: per column the exact minimizer of
/// sum_n |r_n + a d_n|^2 + gamma_over_mu * a^2 with r = d_t F - i2pi w F and d = D_w F.
inline ChirpTrack update_alpha(const TFMatrix& F, Real gamma_over_mu, DerivMethod method = DerivMethod::spectral) {
  if (!(gamma_over_mu > 0.0)) throw ContractError("update_alpha: gamma_over_mu must be > 0");
  const TFGrid& g = F.grid;
  if (std::isinf(gamma_over_mu)) return ChirpTrack::zeros(g);
  TFMatrix r = d_t(F, method);
  add_scaled_frequency_phase(r.values, F.values, g, -1.0);
  const TFMatrix d = d_omega(F);
  RealVector a(g.num_times());
  for (int m = 0; m < g.num_times(); ++m) {
    const Real num = (d.values.col(m).conjugate().array() * r.values.col(m).array()).real().sum();
    const Real den = d.values.col(m).squaredNorm() + gamma_over_mu;
    a(m) = -num / den;
  }
  return ChirpTrack(std::move(a));
}

/// gamma/mu ratio that makes update_alpha the exact minimizer of eval_H's
/// alpha slice (the transport term carries dt*dw, the alpha term only dt).
inline Real alpha_ridge_ratio(const TycoonParams& p, Real mu_tilde, const TFGrid& g) {
  const Real mu = p.transport_weight(mu_tilde);
  if (mu <= 0.0) return std::numeric_limits<Real>::infinity();
  return p.gamma / (mu * g.dw);
}

struct OuterRecord {
  int inner_iterations = 0;
  bool inner_converged = false;
  Real lipschitz = 0.0;
  bool lipschitz_converged = false;
  Real H_after_fista = 0.0;
  FunctionalValue H;  // after the alpha update
  Real rel_change_F = 0.0;
  Real rel_change_alpha = 0.0;
};

struct StageRecord {
  Real mu_tilde = 0.0;
  Real H_start = 0.0;
  bool converged = false;
  std::vector<OuterRecord> outer;
  /// Accepted FISTA objective values of every inner run in this stage, in order.
  std::vector<std::vector<Real>> inner_objective;

  [[nodiscard]] const FunctionalValue& final_value() const { return outer.back().H; }

  /// H_start, then per outer iteration H after FISTA and H after the alpha update.
  [[nodiscard]] std::vector<Real> descent_sequence() const {
    std::vector<Real> s{H_start};
    for (const auto& o : outer) {
      s.push_back(o.H_after_fista);
      s.push_back(o.H.total);
    }
    return s;
  }
};

struct SolveTrace {
  std::vector<StageRecord> stages;
  Real final_lipschitz = 0.0;
};

struct TycoonResult {
  TFMatrix F;
  ChirpTrack alpha;
  SolveTrace trace;
  Real chosen_mu_tilde = 0.0;
  int chosen_stage = 0;
};

/// Number of steps in the trace where H rises by more than tol relative:
/// across each stage's descent sequence and every inner FISTA run.
inline int descent_violations(const SolveTrace& tr, Real tol = 1e-12) {
  auto count = [tol](const std::vector<Real>& v) {
    int bad = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[i - 1] + tol * std::abs(v[i - 1])) ++bad;
    return bad;
  };
  int bad = 0;
  for (const auto& st : tr.stages) {
    bad += count(st.descent_sequence());
    for (const auto& inner : st.inner_objective) bad += count(inner);
  }
  return bad;
}

/// Index of the largest-mu stage whose data term is at the noise floor
/// dt*(M+1)*noise_std^2; the last stage when none qualifies.
inline int select_mu_discrepancy(const SolveTrace& trace, Real noise_std, const TFGrid& grid) {
  if (trace.stages.empty()) throw ContractError("select_mu_discrepancy: empty trace");
  if (noise_std < 0.0) throw ContractError("select_mu_discrepancy: noise_std must be >= 0");
  const Real floor = grid.dt * grid.num_times() * noise_std * noise_std;
  for (std::size_t s = 0; s < trace.stages.size(); ++s) {
    const auto& st = trace.stages[s];
    if (!st.outer.empty() && st.final_value().data_term <= floor) return static_cast<int>(s);
  }
  return static_cast<int>(trace.stages.size()) - 1;
}

struct TycoonOptions {
  /// When set, the returned stage is chosen by the discrepancy principle.
  std::optional<Real> noise_std;
  /// Receives every completed outer iteration (stage index, record).
  std::function<void(int, const OuterRecord&)> on_outer;
};

/// Alternating minimization with warm-started mu_tilde continuation.
inline TycoonResult solve(const SampledSignal& f, const TycoonParams& p, const TycoonOptions& opts = {}) {
  f.check();
  p.check();
  const TFGrid g = f.grid();

  TFMatrix F(g);
  ChirpTrack alpha = ChirpTrack::zeros(g);
  TycoonResult res;
  std::vector<std::pair<TFMatrix, ChirpTrack>> snapshots;

  for (std::size_t s = 0; s < p.mu_schedule.size(); ++s) {
    const Real mu_tilde = p.mu_schedule[s];
    const Real mu = p.transport_weight(mu_tilde);
    const Real ridge = alpha_ridge_ratio(p, mu_tilde, g);
    StageRecord stage;
    stage.mu_tilde = mu_tilde;
    stage.H_start = eval_H(F, alpha, f, p, mu_tilde).total;

    for (int it = 0; it < p.max_outer_iters; ++it) {
      const auto lip = estimate_lipschitz(alpha, g, mu, p.power_iters, p.power_seed + s * 1000 + it, p.deriv_method);
      FistaResult fr = fista(F, alpha, f, p, mu_tilde, lip.L);
      ChirpTrack next_alpha = update_alpha(fr.F, ridge, p.deriv_method);

      OuterRecord rec;
      rec.inner_iterations = fr.iterations;
      rec.inner_converged = fr.converged;
      rec.lipschitz = lip.L;
      rec.lipschitz_converged = lip.converged;
      rec.H_after_fista = fr.value.total;
      rec.rel_change_F = relative_change((fr.F.values - F.values).norm(), F.norm());
      rec.rel_change_alpha = relative_change((next_alpha.values - alpha.values).norm(), alpha.values.norm());
      F = std::move(fr.F);
      alpha = std::move(next_alpha);
      rec.H = eval_H(F, alpha, f, p, mu_tilde);
      if (!std::isfinite(rec.H.total)) throw SolverError("tycoon: non-finite functional value");
      res.trace.final_lipschitz = lip.L;
      stage.inner_objective.push_back(std::move(fr.objective));
      stage.outer.push_back(rec);
      if (opts.on_outer) opts.on_outer(static_cast<int>(s), rec);
      if (rec.rel_change_F <= p.eps1 && rec.rel_change_alpha <= p.eps2) {
        stage.converged = true;
        break;
      }
    }
    res.trace.stages.push_back(std::move(stage));
    if (opts.noise_std) snapshots.emplace_back(F, alpha);
  }

  res.chosen_stage = static_cast<int>(p.mu_schedule.size()) - 1;
  if (opts.noise_std) {
    res.chosen_stage = select_mu_discrepancy(res.trace, *opts.noise_std, g);
    F = snapshots[static_cast<std::size_t>(res.chosen_stage)].first;
    alpha = snapshots[static_cast<std::size_t>(res.chosen_stage)].second;
  }
  res.chosen_mu_tilde = p.mu_schedule[static_cast<std::size_t>(res.chosen_stage)];
  res.F = std::move(F);
  res.alpha = std::move(alpha);
  return res;
}

}  // namespace tycoon
