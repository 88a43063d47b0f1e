#pragma once

// itvPS rasterization, tvPS extraction, 1-D optimal transport and the
// D metric, plus dynamic-range compression for display.

#include "tycoon/synth.hpp"
#include "tycoon/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace tycoon {

/// Nonnegative time-varying power spectrum on a grid.
struct TvPS {
  TFGrid grid;
  RealMatrix values;

  TvPS() = default;
  explicit TvPS(const TFGrid& g) : grid(g), values(RealMatrix::Zero(g.num_freqs(), g.num_times())) {}
  TvPS(const TFGrid& g, RealMatrix v) : grid(g), values(std::move(v)) { check(); }

  void check() const {
    if (values.rows() != grid.num_freqs() || values.cols() != grid.num_times())
      throw ContractError("TvPS: values are " + std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                          " but grid expects " + shape_string(grid));
    if (!values.allFinite() || (values.size() && values.minCoeff() < 0.0))
      throw ContractError("TvPS: entries must be finite and >= 0");
  }
};

struct ItvpsResult {
  TvPS S;
  /// Samples whose IF fell outside [0, N dw]; their mass is dropped.
  int dropped = 0;
};

/// Ideal tvPS: every component deposits A^2 at its finite-difference IF,
/// split linearly between the two bracketing bins.
inline ItvpsResult itvps(const std::vector<GIMTComponent>& comps, const TFGrid& grid) {
  ItvpsResult out{TvPS(grid), 0};
  for (const auto& c : comps) {
    c.check();
    if (c.size() != grid.num_times()) throw ContractError("itvps: component length does not match grid " + shape_string(grid));
    if (c.support_length() == 0) continue;
    if (c.support_length() < 3) throw ContractError("itvps: support needs at least 3 samples");
    const RealVector inst = detail::gradient(c.phase.segment(c.support_begin, c.support_length()), grid.dt);
    for (int m = c.support_begin; m <= c.support_end; ++m) {
      const Real pos = inst(m - c.support_begin) / grid.dw;
      if (!(pos >= 0.0) || pos > static_cast<Real>(grid.N)) {
        ++out.dropped;
        continue;
      }
      const Real mass = c.amp(m) * c.amp(m);
      const int lo = std::min(static_cast<int>(std::floor(pos)), grid.N);
      const Real frac = pos - lo;
      out.S.values(lo, m) += mass * (1.0 - frac);
      if (frac > 0.0) out.S.values(lo + 1, m) += mass * frac;
    }
  }
  return out;
}

/// |F|^2 entrywise.
inline TvPS tvps_from_tfr(const TFMatrix& F) {
  F.check();
  return TvPS(F.grid, F.values.cwiseAbs2());
}

/// bin_width * sum_j |CDF_p(j) - CDF_q(j)| for normalized histograms.
inline Real ot1d(const RealVector& p, const RealVector& q, Real bin_width) {
  if (p.size() != q.size() || p.size() == 0) throw ContractError("ot1d: histograms must have equal nonzero length");
  if (!(bin_width > 0.0)) throw ContractError("ot1d: bin_width must be > 0");
  if (p.minCoeff() < 0.0 || q.minCoeff() < 0.0) throw ContractError("ot1d: negative mass");
  if (std::abs(p.sum() - 1.0) > 1e-9 || std::abs(q.sum() - 1.0) > 1e-9)
    throw ContractError("ot1d: histograms must sum to 1");
  Real cp = 0.0, cq = 0.0, acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    cp += p(j);
    cq += q(j);
    acc += std::abs(cp - cq);
  }
  return bin_width * acc;
}

inline constexpr Real kDegenerateColumnMass = 1e-12;

struct DMetricResult {
  Real value = 0.0;
  int skipped = 0;
  /// Per-column OT distance; NaN for skipped columns.
  RealVector per_column;
};

/// D = 100 dt sum_m ot1d(column m of S, column m of S_tilde) over columns
/// where both sides carry mass.
inline DMetricResult d_metric(const TvPS& S, const TvPS& S_tilde) {
  S.check();
  S_tilde.check();
  if (!(S.grid == S_tilde.grid))
    throw ContractError("d_metric: grid mismatch " + shape_string(S.grid) + " vs " + shape_string(S_tilde.grid));
  const TFGrid& g = S.grid;
  DMetricResult out;
  out.per_column = RealVector::Constant(g.num_times(), std::numeric_limits<Real>::quiet_NaN());
  Real acc = 0.0;
  for (int m = 0; m < g.num_times(); ++m) {
    const Real a = S.values.col(m).sum();
    const Real b = S_tilde.values.col(m).sum();
    if (a < kDegenerateColumnMass || b < kDegenerateColumnMass) {
      ++out.skipped;
      continue;
    }
    const Real d = ot1d(S.values.col(m) / a, S_tilde.values.col(m) / b, g.dw);
    out.per_column(m) = d;
    acc += d;
  }
  if (out.skipped == g.num_times()) throw ContractError("d_metric: every column is degenerate");
  out.value = 100.0 * g.dt * acc;
  return out;
}

/// Quantile with linear interpolation between order statistics.
inline Real quantile(std::vector<Real> v, Real q) {
  if (v.empty()) throw ContractError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile: q outside [0,1]");
  std::sort(v.begin(), v.end());
  const Real pos = q * static_cast<Real>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<Real>(lo)) * (v[hi] - v[lo]);
}

/// min(S, M_q) / M_q with M_q the given quantile of the entries.
inline RealMatrix compress_dynamic_range(const TvPS& S, Real q = 0.999) {
  S.check();
  if (!(q > 0.0 && q <= 1.0)) throw ContractError("compress_dynamic_range: quantile must be in (0,1]");
  if (S.values.size() == 0 || S.values.maxCoeff() == 0.0) return RealMatrix::Zero(S.values.rows(), S.values.cols());
  const Real mq = quantile(std::vector<Real>(S.values.data(), S.values.data() + S.values.size()), q);
  // Over half the entries can be zero with a sparse TFR; then every nonzero entry saturates.
  if (mq == 0.0) return (S.values.array() > 0.0).cast<Real>().matrix();
  return (S.values.array().min(mq) / mq).matrix();
}

}  // namespace tycoon
