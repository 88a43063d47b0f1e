#include "support.hpp"

#include <gtest/gtest.h>

using namespace tycoon;
using namespace tycoon::testing;

namespace {

TycoonParams quick_params(std::vector<Real> schedule) {
  TycoonParams p;
  p.mu_schedule = std::move(schedule);
  p.max_inner_iters = 60;
  p.min_inner_iters = 5;
  p.max_outer_iters = 4;
  return p;
}

SolveTrace trace_with_data_terms(const std::vector<Real>& data) {
  SolveTrace tr;
  for (Real d : data) {
    StageRecord st;
    OuterRecord o;
    o.H.data_term = d;
    st.outer.push_back(o);
    tr.stages.push_back(st);
  }
  return tr;
}

}  // namespace

TEST(Power, MatchesDenseEigenvalue) {
  std::mt19937_64 rng(2);
  const TFGrid g = make_grid(8, 0.1);
  const ChirpTrack a(random_real(g.num_times(), rng, 0.3));
  for (Real mu : {0.0, 0.5, 3.0}) {
    auto apply = [&](const ComplexMatrix& x) { return smooth_hessian_apply(TFMatrix(g, x), a, mu).values; };
    const Real lmax = largest_eigenvalue_symmetric(dense_real_embedding(apply, g.num_freqs(), g.num_times()));
    const auto est = estimate_lipschitz(a, g, mu, 2000, 7);
    EXPECT_GE(est.L, lmax * (1.0 - 1e-9));
    EXPECT_NEAR(est.L / kLipschitzSafety, lmax, 1e-3 * lmax) << "mu=" << mu;
  }
}

TEST(Power, ZeroMapAndBadIters) {
  auto zero = [](const ComplexMatrix& x) { return ComplexMatrix::Zero(x.rows(), x.cols()).eval(); };
  std::mt19937_64 rng(1);
  const auto r = power_iteration(zero, random_complex(3, 4, rng), 30);
  EXPECT_EQ(r.eigenvalue, 0.0);
  EXPECT_TRUE(r.converged);
  const TFGrid g = make_grid(8, 0.1);
  EXPECT_THROW(estimate_lipschitz(ChirpTrack::zeros(g), g, 1.0, 10, 1), ContractError);
}

TEST(Prox, SubgradientCondition) {
  std::mt19937_64 rng(9);
  const TFGrid g = make_grid(198, 0.1);  // 100 x 199 entries
  TFMatrix F = random_tfr(g, rng);
  const Real tau = 0.8;
  const TFMatrix P = prox_l1(F, tau);
  for (Eigen::Index j = 0; j < F.values.cols(); ++j)
    for (Eigen::Index i = 0; i < F.values.rows(); ++i) {
      const Complex x = P.values(i, j), v = F.values(i, j);
      if (x != Complex(0.0, 0.0)) {
        EXPECT_LE(std::abs(v - x - tau * x / std::abs(x)), 1e-12);
      } else {
        EXPECT_LE(std::abs(v), tau + 1e-12);
      }
    }
}

TEST(Prox, Examples) {
  const TFGrid g = make_grid(4, 0.1);
  TFMatrix F(g);
  F.values(0, 0) = Complex(3.0, 4.0);
  F.values(1, 1) = Complex(0.3, 0.4);
  const TFMatrix P = prox_l1(F, 1.0);
  EXPECT_LE(std::abs(P.values(0, 0) - Complex(2.4, 3.2)), 1e-15);
  EXPECT_EQ(P.values(1, 1), Complex(0.0, 0.0));
  EXPECT_EQ(prox_l1(F, 0.0).values, F.values);
  EXPECT_TRUE(prox_l1(F, 5.0).values.isZero(0.0));
  EXPECT_THROW(prox_l1(F, -1.0), ContractError);
}

TEST(Fista, LeastSquaresLimit) {
  std::mt19937_64 rng(4);
  const TFGrid g = make_grid(32, 0.1);
  const SampledSignal f = random_signal(g, rng);
  TycoonParams p;
  p.mu_schedule = {1e-12};
  p.lambda_tilde = 0.0;
  p.max_inner_iters = 500;
  p.min_inner_iters = 500;
  const ChirpTrack a = ChirpTrack::zeros(g);
  const Real L = estimate_lipschitz(a, g, 0.0, 100, 3).L;
  const auto r = fista(TFMatrix(g), a, f, p, 1e-12, L);
  EXPECT_LE(r.value.data_term, 1e-10 * g.dt * f.samples.squaredNorm());
  EXPECT_TRUE(non_increasing(r.objective));
}

TEST(Fista, ZeroSignalFixedPoint) {
  const TFGrid g = make_grid(16, 0.1);
  const SampledSignal f(RealVector::Zero(g.num_times()), g.dt);
  const auto r = fista(TFMatrix(g), ChirpTrack::zeros(g), f, quick_params({1.0}), 1.0, 10.0);
  EXPECT_TRUE(r.F.values.isZero(0.0));
  EXPECT_THROW(fista(TFMatrix(g), ChirpTrack::zeros(g), f, quick_params({1.0}), 1.0, 0.0), SolverError);
}

TEST(Alpha, MatchesOneDimensionalOracle) {
  std::mt19937_64 rng(17);
  const TFGrid g = make_grid(16, 0.1);
  for (Real rho : {1e-3, 0.1, 10.0}) {
    const TFMatrix F = random_tfr(g, rng);
    const ChirpTrack a = update_alpha(F, rho);
    TFMatrix r = d_t(F);
    add_scaled_frequency_phase(r.values, F.values, g, -1.0);
    const TFMatrix d = d_omega(F);
    for (int m = 0; m < g.num_times(); ++m)
      EXPECT_NEAR(a.values(m), minimize_alpha_column(r.values.col(m), d.values.col(m), rho), 1e-8);
  }
}

TEST(Alpha, MinimizesFunctionalSlice) {
  std::mt19937_64 rng(19);
  const TFGrid g = make_grid(16, 0.1);
  const SampledSignal f = random_signal(g, rng);
  const TFMatrix F = random_tfr(g, rng);
  TycoonParams p = quick_params({1.0});
  const Real mu_tilde = 0.7;
  const ChirpTrack a = update_alpha(F, alpha_ridge_ratio(p, mu_tilde, g));
  const Real best = eval_H(F, a, f, p, mu_tilde).total;
  for (int trial = 0; trial < 20; ++trial) {
    ChirpTrack b(a.values + random_real(g.num_times(), rng, 1e-3));
    EXPECT_GE(eval_H(F, b, f, p, mu_tilde).total, best);
  }
}

TEST(Alpha, InfiniteRatioAndBadRatio) {
  std::mt19937_64 rng(23);
  const TFGrid g = make_grid(16, 0.1);
  const TFMatrix F = random_tfr(g, rng);
  EXPECT_TRUE(update_alpha(F, std::numeric_limits<Real>::infinity()).values.isZero(0.0));
  EXPECT_TRUE(update_alpha(TFMatrix(g), 1.0).values.isZero(0.0));
  EXPECT_THROW(update_alpha(F, 0.0), ContractError);
  TycoonParams p = quick_params({1.0});
  p.lambda_tilde = 0.0;
  EXPECT_TRUE(std::isinf(alpha_ridge_ratio(p, 1.0, g)));
}

TEST(Alpha, RecoversChirpOfSmoothRidge) {
  const TFGrid g = make_grid(256, 0.1);
  RealVector amp = RealVector::Ones(g.num_times()), phase(g.num_times()), inst(g.num_times());
  for (int m = 0; m < g.num_times(); ++m) {
    const Real t = g.time(m);
    phase(m) = 0.5 * t + 0.025 * t * t;
    inst(m) = 0.5 + 0.05 * t;
  }
  const TFMatrix F = approximate_itfr(g, amp, phase, inst, 0.1);
  const ChirpTrack a = update_alpha(F, 1e-12);
  const int trim = g.num_times() / 10;
  const Real mean = a.values.segment(trim, g.num_times() - 2 * trim).mean();
  EXPECT_NEAR(mean, 0.05, 0.002);
}

TEST(Discrepancy, Examples) {
  const TFGrid g = make_grid(9, 0.1);  // dt (M+1) = 1
  const auto tr = trace_with_data_terms({10.0, 4.0, 1.0});
  EXPECT_EQ(select_mu_discrepancy(tr, std::sqrt(5.0), g), 1);
  EXPECT_EQ(select_mu_discrepancy(tr, std::sqrt(0.5), g), 2);
  EXPECT_EQ(select_mu_discrepancy(tr, 10.0, g), 0);
  EXPECT_THROW(select_mu_discrepancy(SolveTrace{}, 1.0, g), ContractError);
  EXPECT_THROW(select_mu_discrepancy(tr, -1.0, g), ContractError);
}

TEST(Params, Validation) {
  TycoonParams p;
  EXPECT_THROW(p.check(), ContractError);
  p.mu_schedule = {1.0, 2.0};
  EXPECT_THROW(p.check(), ContractError);
  p.mu_schedule = {2.0, 1.0};
  EXPECT_NO_THROW(p.check());
  p.lambda_tilde = 1.5;
  EXPECT_THROW(p.check(), ContractError);
  p.lambda_tilde = 0.5;
  p.min_inner_iters = p.max_inner_iters + 1;
  EXPECT_THROW(p.check(), ContractError);
  p.min_inner_iters = 1;
  p.gamma = 0.0;
  EXPECT_THROW(p.check(), ContractError);
}

TEST(Schedule, LogSpacing) {
  const auto s = log_schedule(1.0, 1e-3, 4);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s[1], 0.1, 1e-15);
  EXPECT_NEAR(s[3], 1e-3, 1e-18);
  EXPECT_EQ(log_schedule(2.0, 1.0, 1), std::vector<Real>{2.0});
  EXPECT_THROW(log_schedule(1.0, 2.0, 3), ContractError);
  const SampledSignal z(RealVector::Zero(8), 0.1);
  EXPECT_EQ(default_mu_schedule(z), std::vector<Real>{1.0});
}

TEST(Solve, ZeroSignalStaysZero) {
  const SampledSignal f(RealVector::Zero(33), 0.1);
  const auto r = solve(f, quick_params({1.0, 0.1}));
  EXPECT_TRUE(r.F.values.isZero(0.0));
  EXPECT_TRUE(r.alpha.values.isZero(0.0));
  EXPECT_TRUE(trace_monotone(r.trace));
}

TEST(Solve, MonotoneOnRandomSignal) {
  std::mt19937_64 rng(29);
  const SampledSignal f = random_signal(make_grid(32, 0.1), rng);
  const auto r = solve(f, quick_params(default_mu_schedule(f, 3)));
  ASSERT_EQ(r.trace.stages.size(), 3u);
  EXPECT_TRUE(trace_monotone(r.trace));
  EXPECT_TRUE(r.F.all_finite());
  EXPECT_EQ(r.chosen_stage, 2);
}

TEST(Solve, DiscrepancyPicksStageAndCallbackFires) {
  std::mt19937_64 rng(31);
  const SampledSignal f = random_signal(make_grid(32, 0.1), rng);
  TycoonOptions opts;
  opts.noise_std = 1e6;
  int calls = 0;
  opts.on_outer = [&](int, const OuterRecord&) { ++calls; };
  const auto r = solve(f, quick_params(default_mu_schedule(f, 3)), opts);
  EXPECT_EQ(r.chosen_stage, 0);
  EXPECT_DOUBLE_EQ(r.chosen_mu_tilde, default_mu_schedule(f, 3)[0]);
  int total = 0;
  for (const auto& st : r.trace.stages) total += static_cast<int>(st.outer.size());
  EXPECT_EQ(calls, total);
}

TEST(Solve, DeterministicAndFiniteDifferenceMode) {
  std::mt19937_64 rng(37);
  const SampledSignal f = random_signal(make_grid(24, 0.1), rng);
  TycoonParams p = quick_params(default_mu_schedule(f, 2));
  const auto a = solve(f, p), b = solve(f, p);
  EXPECT_EQ(a.F.values, b.F.values);
  p.deriv_method = DerivMethod::finite_difference;
  const auto c = solve(f, p);
  EXPECT_TRUE(trace_monotone(c.trace));
}

TEST(Solve, PureToneRidge) {
  const TFGrid g = make_grid(64, 0.1);
  RealVector x(g.num_times());
  for (int m = 0; m < g.num_times(); ++m) x(m) = std::cos(kTwoPi * g.time(m));
  const SampledSignal f(x, g.dt);
  TycoonParams p;
  p.mu_schedule = default_mu_schedule(f);
  const auto r = solve(f, p);
  EXPECT_TRUE(trace_monotone(r.trace));
  EXPECT_GE(ridge_hit_fraction(tvps_from_tfr(r.F), RealVector::Ones(g.num_times()), 2), 0.9);
}

TEST(Power, DataOnlyClosedForm) {
  // With mu = 0 the map is 2 dt A^*A, whose top eigenvalue is 2 dt (2 dw)^2 (N+1).
  const TFGrid g = make_grid(8, 0.1);
  const Real expect = 2.0 * g.dt * (2.0 * g.dw) * (2.0 * g.dw) * g.num_freqs();
  auto apply = [&](const ComplexMatrix& x) { return smooth_hessian_apply(TFMatrix(g, x), ChirpTrack::zeros(g), 0.0).values; };
  EXPECT_NEAR(largest_eigenvalue_symmetric(dense_real_embedding(apply, g.num_freqs(), g.num_times())), expect, 1e-9 * expect);
  EXPECT_NEAR(estimate_lipschitz(ChirpTrack::zeros(g), g, 0.0, 50, 1).L / kLipschitzSafety, expect, 1e-6 * expect);
}

TEST(Prox, PolarExamples) {
  const TFGrid g = make_grid(4, 0.1);
  TFMatrix F(g);
  F.values(0, 0) = std::polar(2.0, kPi / 4.0);
  F.values(0, 1) = std::polar(0.3, 1.0);
  const TFMatrix P = prox_l1(F, 0.5);
  EXPECT_LE(std::abs(P.values(0, 0) - std::polar(1.5, kPi / 4.0)), 1e-15);
  EXPECT_EQ(P.values(0, 1), Complex(0.0, 0.0));
}

TEST(Fista, TinyGridLeastSquaresResidual) {
  std::mt19937_64 rng(6);
  const TFGrid g = make_grid(8, 0.1);
  const SampledSignal f = random_signal(g, rng);
  TycoonParams p;
  p.mu_schedule = {1e-12};
  p.lambda_tilde = 0.0;
  p.max_inner_iters = 2000;
  const ChirpTrack a = ChirpTrack::zeros(g);
  const auto r = fista(TFMatrix(g), a, f, p, 1e-12, estimate_lipschitz(a, g, 0.0, 50, 1).L);
  EXPECT_LE((op_A(r.F) - f.samples).norm(), 1e-3 * f.samples.norm());
}

TEST(Alpha, FlatAlongFrequencyGivesZero) {
  std::mt19937_64 rng(25);
  const TFGrid g = make_grid(16, 0.1);
  const ComplexMatrix row = random_complex(1, g.num_times(), rng);
  const TFMatrix F(g, row.replicate(g.num_freqs(), 1));
  EXPECT_LE(update_alpha(F, 1e-3).values.norm(), 1e-9);
}

TEST(Discrepancy, ZeroNoiseAndSingleStage) {
  const TFGrid g = make_grid(9, 0.1);
  EXPECT_EQ(select_mu_discrepancy(trace_with_data_terms({10.0, 4.0, 1.0}), 0.0, g), 2);
  EXPECT_EQ(select_mu_discrepancy(trace_with_data_terms({3.0}), 0.1, g), 0);
}

TEST(Descent, ViolationCount) {
  SolveTrace tr;
  StageRecord st;
  st.H_start = 5.0;
  OuterRecord o;
  o.H_after_fista = 4.0;
  o.H.total = 4.5;
  st.outer.push_back(o);
  st.inner_objective = {{5.0, 4.0, 4.0}, {4.5, 4.6}};
  tr.stages.push_back(st);
  EXPECT_EQ(descent_violations(tr), 2);
  EXPECT_FALSE(trace_monotone(tr));
  tr.stages[0].outer[0].H.total = 3.9;
  tr.stages[0].inner_objective[1] = {3.9};
  EXPECT_EQ(descent_violations(tr), 0);
  EXPECT_TRUE(trace_monotone(tr));
}

TEST(Stopping, ZeroDenominatorGuard) {
  EXPECT_EQ(relative_change(0.0, 0.0), 0.0);
  EXPECT_EQ(relative_change(1e-16, 0.0), 0.0);
  EXPECT_GT(relative_change(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(relative_change(1.0, 4.0), 0.25);
}

TEST(Solve, ConvergedStageIsNearFixedPoint) {
  const TFGrid g = make_grid(16, 0.1);
  RealVector x(g.num_times());
  for (int m = 0; m < g.num_times(); ++m) x(m) = std::cos(kTwoPi * (1.2 * g.time(m) + 0.1 * g.time(m) * g.time(m)));
  const SampledSignal f(x, g.dt);
  TycoonParams p;
  p.mu_schedule = {default_mu_schedule(f).back()};
  p.max_outer_iters = 400;
  p.max_inner_iters = 2000;
    const auto r = solve(f, p);
  ASSERT_TRUE(r.trace.stages[0].converged);
  const Real mu_tilde = p.mu_schedule[0];
  const Real L = estimate_lipschitz(r.alpha, g, p.transport_weight(mu_tilde), p.power_iters, 99).L;
  const auto fr = fista(r.F, r.alpha, f, p, mu_tilde, L);
  const ChirpTrack a = update_alpha(fr.F, alpha_ridge_ratio(p, mu_tilde, g));
  EXPECT_LE(relative_change((fr.F.values - r.F.values).norm(), r.F.norm()), 2.0 * p.eps1);
  EXPECT_LE(relative_change((a.values - r.alpha.values).norm(), r.alpha.values.norm()), 2.0 * p.eps2);
}
