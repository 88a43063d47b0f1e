#pragma once

// Shared helpers and independent oracles for the unit and acceptance tests.

#include "tycoon/tycoon.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace tycoon::testing {

inline ComplexMatrix random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<Real> nd(0.0, 1.0);
  ComplexMatrix x(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) x(i, j) = Complex(nd(rng), nd(rng));
  return x;
}

inline RealVector random_real(int n, std::mt19937_64& rng, Real scale = 1.0) {
  std::normal_distribution<Real> nd(0.0, scale);
  RealVector x(n);
  for (int i = 0; i < n; ++i) x(i) = nd(rng);
  return x;
}

inline TFMatrix random_tfr(const TFGrid& g, std::mt19937_64& rng) {
  return TFMatrix(g, random_complex(g.num_freqs(), g.num_times(), rng));
}

inline SampledSignal random_signal(const TFGrid& g, std::mt19937_64& rng) {
  return SampledSignal(random_real(g.num_times(), rng), g.dt);
}

/// Dense real matrix of a real-linear map on complex (rows x cols) matrices,
/// in the embedding [Re(vec X); Im(vec X)].
template <class Map>
RealMatrix dense_real_embedding(Map&& apply, int rows, int cols) {
  const int n = rows * cols;
  RealMatrix D(2 * n, 2 * n);
  for (int k = 0; k < 2 * n; ++k) {
    ComplexMatrix e = ComplexMatrix::Zero(rows, cols);
    const int idx = k % n;
    e(idx % rows, idx / rows) = k < n ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
    const ComplexMatrix y = apply(e);
    for (int i = 0; i < n; ++i) {
      D(i, k) = y(i % rows, i / rows).real();
      D(n + i, k) = y(i % rows, i / rows).imag();
    }
  }
  return D;
}

inline Real largest_eigenvalue_symmetric(const RealMatrix& D) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (D + D.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Minimizer of q(a) = sum |r + a d|^2 + rho a^2 by a grid scan, then
/// bisection on the sign of q'. Independent of the closed form.
inline Real minimize_alpha_column(const Eigen::VectorXcd& r, const Eigen::VectorXcd& d, Real rho) {
  auto q = [&](Real a) { return (r + a * d).squaredNorm() + rho * a * a; };
  auto dq = [&](Real a) { return 2.0 * (d.conjugate().cwiseProduct(r + a * d)).real().sum() + 2.0 * rho * a; };
  Real lo = -1.0, hi = 1.0;
  while (dq(lo) > 0.0) lo *= 2.0;
  while (dq(hi) < 0.0) hi *= 2.0;
  const int n = 2000;
  Real best = lo, bestv = q(lo);
  for (int i = 1; i <= n; ++i) {
    const Real a = lo + (hi - lo) * i / n;
    if (q(a) < bestv) {
      bestv = q(a);
      best = a;
    }
  }
  Real a = std::max(lo, best - (hi - lo) / n), b = std::min(hi, best + (hi - lo) / n);
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    const Real c = 0.5 * (a + b);
    if (c == a || c == b) break;
    (dq(c) > 0.0 ? b : a) = c;
  }
  return 0.5 * (a + b);
}

/// Minimum-cost transport between histograms p and q with cost
/// |i - j| * bin_width, by successive shortest paths (Bellman-Ford) on the
/// bipartite network. Independent of the CDF formula.
inline Real transport_lp(const RealVector& p, const RealVector& q, Real bin_width) {
  const int n = static_cast<int>(p.size());
  const int src = 2 * n, snk = 2 * n + 1, V = 2 * n + 2;
  struct Edge {
    int to;
    Real cap;
    Real cost;
    int rev;
  };
  std::vector<std::vector<Edge>> G(static_cast<std::size_t>(V));
  auto add = [&](int u, int v, Real cap, Real cost) {
    G[static_cast<std::size_t>(u)].push_back({v, cap, cost, static_cast<int>(G[static_cast<std::size_t>(v)].size())});
    G[static_cast<std::size_t>(v)].push_back({u, 0.0, -cost, static_cast<int>(G[static_cast<std::size_t>(u)].size()) - 1});
  };
  const Real inf = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < n; ++i) {
    add(src, i, p(i), 0.0);
    add(n + i, snk, q(i), 0.0);
    for (int j = 0; j < n; ++j) add(i, n + j, inf, std::abs(i - j) * bin_width);
  }
  Real total = 0.0, flow = 0.0;
  const Real need = p.sum();
  while (flow < need - 1e-15) {
    std::vector<Real> dist(static_cast<std::size_t>(V), inf);
    std::vector<int> pv(static_cast<std::size_t>(V), -1), pe(static_cast<std::size_t>(V), -1);
    dist[static_cast<std::size_t>(src)] = 0.0;
    for (int round = 0; round < V; ++round) {
      bool changed = false;
      for (int u = 0; u < V; ++u) {
        if (dist[static_cast<std::size_t>(u)] == inf) continue;
        for (int k = 0; k < static_cast<int>(G[static_cast<std::size_t>(u)].size()); ++k) {
          const Edge& e = G[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
          if (e.cap <= 1e-15) continue;
          const Real nd = dist[static_cast<std::size_t>(u)] + e.cost;
          if (nd < dist[static_cast<std::size_t>(e.to)] - 1e-15) {
            dist[static_cast<std::size_t>(e.to)] = nd;
            pv[static_cast<std::size_t>(e.to)] = u;
            pe[static_cast<std::size_t>(e.to)] = k;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[static_cast<std::size_t>(snk)] == inf) break;
    Real push = inf;
    for (int v = snk; v != src; v = pv[static_cast<std::size_t>(v)])
      push = std::min(push, G[static_cast<std::size_t>(pv[static_cast<std::size_t>(v)])][static_cast<std::size_t>(pe[static_cast<std::size_t>(v)])].cap);
    for (int v = snk; v != src; v = pv[static_cast<std::size_t>(v)]) {
      Edge& e = G[static_cast<std::size_t>(pv[static_cast<std::size_t>(v)])][static_cast<std::size_t>(pe[static_cast<std::size_t>(v)])];
      e.cap -= push;
      G[static_cast<std::size_t>(v)][static_cast<std::size_t>(e.rev)].cap += push;
    }
    flow += push;
    total += push * dist[static_cast<std::size_t>(snk)];
  }
  return total;
}

inline RealVector random_histogram(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  RealVector h(n);
  for (int i = 0; i < n; ++i) h(i) = u(rng) < 0.2 ? 0.0 : u(rng);
  if (h.sum() == 0.0) h(0) = 1.0;
  return h / h.sum();
}

/// Magnitude of the analytic signal computed with the FFT.
inline RealVector analytic_envelope(const RealVector& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXcd X = fft::forward(x);
  for (Eigen::Index k = 1; k < n; ++k) {
    if (2 * k < n) X(k) *= 2.0;
    else if (2 * k > n) X(k) = 0.0;
  }
  return fft::inverse(X).cwiseAbs();
}

/// Discretized approximative iTFR of a single component:
/// F[n,m] = a(t) e^{i2pi phase(t)} h((w_n - if(t))/theta) / (2 theta') with a
/// Gaussian bump h normalized so that op_A(F) ~ a cos(2 pi phase).
inline TFMatrix approximate_itfr(const TFGrid& g, const RealVector& amp, const RealVector& phase,
                                 const RealVector& inst, Real theta) {
  TFMatrix F(g);
  for (int m = 0; m < g.num_times(); ++m) {
    RealVector bump(g.num_freqs());
    for (int n = 0; n <= g.N; ++n) {
      const Real z = (g.freq(n) - inst(m)) / theta;
      bump(n) = std::exp(-0.5 * z * z);
    }
    const Real s = 2.0 * g.dw * bump.sum();
    for (int n = 0; n <= g.N; ++n) F.values(n, m) = std::polar(amp(m) * bump(n) / s, kTwoPi * phase(m));
  }
  return F;
}

/// True when the sequence never increases by more than tol relative.
inline bool non_increasing(const std::vector<Real>& v, Real tol = 1e-12) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + tol * std::max(std::abs(v[i - 1]), 1e-300)) return false;
  return true;
}

inline bool trace_monotone(const SolveTrace& tr, Real tol = 1e-12) {
  for (const auto& st : tr.stages) {
    if (!non_increasing(st.descent_sequence(), tol)) return false;
    for (const auto& inner : st.inner_objective)
      if (!non_increasing(inner, tol)) return false;
  }
  return true;
}

/// Per-column argmax within +-bins of the known frequency for the interior
/// (10% trimmed at each end) columns; returns the hit fraction.
inline Real ridge_hit_fraction(const TvPS& S, const RealVector& inst, int bins) {
  const TFGrid& g = S.grid;
  const int trim = g.num_times() / 10;
  int hits = 0, total = 0;
  for (int m = trim; m < g.num_times() - trim; ++m) {
    Eigen::Index k;
    S.values.col(m).maxCoeff(&k);
    if (std::abs(static_cast<Real>(k) - inst(m) / g.dw) <= bins) ++hits;
    ++total;
  }
  return total ? static_cast<Real>(hits) / total : 0.0;
}

}  // namespace tycoon::testing
