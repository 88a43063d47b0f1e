#pragma once

#include "tycoon/types.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace tycoon::fft {

namespace detail {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  PlanPair() = default;
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
  ~PlanPair() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

// Plans transforming every row of a column-major rows x cols matrix along
// its columns index (stride = rows, distance = 1).
inline const PlanPair& row_plans(int rows, int cols) {
  static std::map<std::pair<int, int>, std::unique_ptr<PlanPair>> cache;
  static std::mutex cache_mutex;
  std::lock_guard<std::mutex> cache_lock(cache_mutex);
  auto& slot = cache[{rows, cols}];
  if (!slot) {
    auto plans = std::make_unique<PlanPair>();
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    const int n[1] = {cols};
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans->forward = fftw_plan_many_dft(1, n, rows, scratch, nullptr, rows, 1, scratch, nullptr, rows, 1,
                                        FFTW_FORWARD, flags);
    plans->backward = fftw_plan_many_dft(1, n, rows, scratch, nullptr, rows, 1, scratch, nullptr, rows, 1,
                                         FFTW_BACKWARD, flags);
    fftw_free(scratch);
    if (!plans->forward || !plans->backward) throw SolverError("fft: FFTW planning failed");
    slot = std::move(plans);
  }
  return *slot;
}

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// In-place unnormalized forward DFT of every row: X[n,k] = sum_m x[n,m] e^{-i2pi km/len}.
inline void forward_rows(ComplexMatrix& x) {
  const auto& p = detail::row_plans(static_cast<int>(x.rows()), static_cast<int>(x.cols()));
  fftw_execute_dft(p.forward, detail::as_fftw(x.data()), detail::as_fftw(x.data()));
}

/// In-place unnormalized inverse DFT of every row (no 1/len factor).
inline void backward_rows(ComplexMatrix& x) {
  const auto& p = detail::row_plans(static_cast<int>(x.rows()), static_cast<int>(x.cols()));
  fftw_execute_dft(p.backward, detail::as_fftw(x.data()), detail::as_fftw(x.data()));
}

/// Signed DFT frequency of bin k for a length-len transform with sample step dt.
/// The Nyquist bin of an even length maps to 0 when zero_nyquist is set.
inline Real bin_frequency(int k, int len, Real dt, bool zero_nyquist = true) {
  if (zero_nyquist && len % 2 == 0 && k == len / 2) return 0.0;
  const int signed_k = (k <= len / 2) ? k : k - len;
  return static_cast<Real>(signed_k) / (static_cast<Real>(len) * dt);
}

/// Forward DFT of a single real vector, returned as complex spectrum.
inline Eigen::VectorXcd forward(const RealVector& x) {
  ComplexMatrix row(1, x.size());
  row.row(0) = x.cast<Complex>().transpose();
  forward_rows(row);
  return row.row(0).transpose();
}

/// Inverse DFT with 1/len normalization.
inline Eigen::VectorXcd inverse(const Eigen::VectorXcd& X) {
  ComplexMatrix row(1, X.size());
  row.row(0) = X.transpose();
  backward_rows(row);
  return row.row(0).transpose() / static_cast<Real>(X.size());
}

}  // namespace tycoon::fft
