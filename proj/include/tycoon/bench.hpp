#pragma once

// Monte-Carlo D-metric comparison of Tycoon, STFT and SST-STFT on the
// two-component benchmark.

#include "tycoon/baselines.hpp"
#include "tycoon/metrics.hpp"
#include "tycoon/solver.hpp"
#include "tycoon/synth.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace tycoon {

struct ReferenceValue {
  const char* method;
  Real mean;
  Real std;
};

/// Full-scale reference D values (L = 80, 100 realizations), noise-free.
inline const std::vector<ReferenceValue>& reference_noise_free() {
  static const std::vector<ReferenceValue> v{{"tycoon", 6.06, 0.25},      {"emd-hs", 7.18, 0.93},
                                             {"stft", 8.76, 0.41},        {"sst-stft", 8.13, 0.42},
                                             {"sst-cwt", 7.36, 0.67}};
  return v;
}

/// Full-scale reference D values at SNR 7.25 dB.
inline const std::vector<ReferenceValue>& reference_noisy() {
  static const std::vector<ReferenceValue> v{{"tycoon", 11.87, 0.74},     {"eemd-hs", 11.65, 0.63},
                                             {"stft", 14.53, 0.55},       {"sst-stft", 14.09, 0.58},
                                             {"sst-cwt", 12.79, 0.69}};
  return v;
}

struct BenchConfig {
  int realizations = 10;
  unsigned long long base_seed = 1;
  BenchmarkConfig signal{40.0, 0.1, 100.0, 200.0, 20.0, 1.2, 0.35, 0.25};
  /// +inf for noise-free runs.
  Real snr_db = std::numeric_limits<Real>::infinity();
  Real window_sigma = 1.0;
  TycoonParams params;  // mu_schedule left empty selects default_mu_schedule per realization
  int threads = 1;
};

struct RealizationResult {
  unsigned long long seed = 0;
  bool ok = false;
  std::string error;
  Real d_tycoon = 0.0;
  Real d_stft = 0.0;
  Real d_sst = 0.0;
  Real seconds_tycoon = 0.0;
  int stages = 0;
  int descent_violations = 0;
};

struct MeanStd {
  Real mean = 0.0;
  Real std = 0.0;  // sample standard deviation
  int count = 0;
};

inline MeanStd mean_std(const std::vector<Real>& v) {
  MeanStd out;
  out.count = static_cast<int>(v.size());
  if (v.empty()) return out;
  for (Real x : v) out.mean += x;
  out.mean /= static_cast<Real>(v.size());
  if (v.size() > 1) {
    Real ss = 0.0;
    for (Real x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<Real>(v.size() - 1));
  }
  return out;
}

struct BenchReport {
  std::vector<RealizationResult> runs;
  MeanStd tycoon, stft, sst;
  [[nodiscard]] bool tycoon_beats_stft() const { return tycoon.count > 0 && tycoon.mean < stft.mean; }
  [[nodiscard]] bool tycoon_beats_sst() const { return tycoon.count > 0 && tycoon.mean < sst.mean; }
};

/// Worker count: TYCOON_THREADS when set (>= 1), otherwise hardware concurrency.
inline int default_thread_count() {
  if (const char* e = std::getenv("TYCOON_THREADS")) {
    const int n = std::atoi(e);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline RealizationResult run_realization(const BenchConfig& cfg, unsigned long long seed) {
  RealizationResult r;
  r.seed = seed;
  try {
    const auto bm = make_two_component_benchmark(cfg.signal, seed);
    const TFGrid grid = bm.f.grid();
    const TvPS truth = itvps({bm.f1, bm.f2}, grid).S;
    const bool noisy = !(std::isinf(cfg.snr_db) && cfg.snr_db > 0.0);
    const SampledSignal x = noisy ? add_noise(bm.f, cfg.snr_db, seed + 1000003ULL) : bm.f;

    TycoonParams p = cfg.params;
    if (p.mu_schedule.empty()) p.mu_schedule = default_mu_schedule(x);
    TycoonOptions opts;
    if (noisy) opts.noise_std = noise_std_for_snr(bm.f, cfg.snr_db);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = solve(x, p, opts);
    r.seconds_tycoon = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    r.stages = static_cast<int>(res.trace.stages.size());
    r.descent_violations = tycoon::descent_violations(res.trace);

    const WindowSpec w{cfg.window_sigma};
    r.d_tycoon = d_metric(truth, tvps_from_tfr(res.F)).value;
    r.d_stft = d_metric(truth, tvps_from_tfr(stft_gauss(x, w, grid))).value;
    r.d_sst = d_metric(truth, tvps_from_tfr(sst_stft(x, w, grid))).value;
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

/// Runs every realization (seed = base_seed + index); failures are recorded
/// and excluded from the summary.
inline BenchReport run_bench(const BenchConfig& cfg) {
  if (cfg.realizations < 1) throw ContractError("bench: need at least one realization");
  BenchReport rep;
  rep.runs.resize(static_cast<std::size_t>(cfg.realizations));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < cfg.realizations; i = next++)
      rep.runs[static_cast<std::size_t>(i)] = run_realization(cfg, cfg.base_seed + static_cast<unsigned long long>(i));
  };
  const int nthreads = std::clamp(cfg.threads, 1, cfg.realizations);
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<Real> a, b, c;
  for (const auto& r : rep.runs) {
    if (!r.ok) continue;
    a.push_back(r.d_tycoon);
    b.push_back(r.d_stft);
    c.push_back(r.d_sst);
  }
  rep.tycoon = mean_std(a);
  rep.stft = mean_std(b);
  rep.sst = mean_std(c);
  return rep;
}

}  // namespace tycoon
