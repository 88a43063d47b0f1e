#include "tycoon/tycoon.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <limits>
#include <string>

using namespace tycoon;

namespace {

struct SolverFlags {
  double eps1 = 5e-4;
  double eps2 = 5e-4;
  double lambda_tilde = TycoonParams{}.lambda_tilde;
  double gamma = 1e-3;
  double mu_hi = 1e-2;
  double mu_lo = 1e-5;
  int stages = 4;
  int max_inner = TycoonParams{}.max_inner_iters;
  int min_inner = TycoonParams{}.min_inner_iters;
  int max_outer = TycoonParams{}.max_outer_iters;
  std::string deriv = "spectral";

  void add(CLI::App* cmd) {
    cmd->add_option("--eps1", eps1, "FISTA stopping value")->capture_default_str();
    cmd->add_option("--eps2", eps2, "outer stopping value for alpha")->capture_default_str();
    cmd->add_option("--lambda", lambda_tilde, "lambda_tilde in [0,1]")->capture_default_str();
    cmd->add_option("--gamma", gamma, "alpha ridge weight")->capture_default_str();
    cmd->add_option("--mu-hi", mu_hi, "first mu_tilde as a fraction of |f|^2 dt")->capture_default_str();
    cmd->add_option("--mu-lo", mu_lo, "last mu_tilde as a fraction of |f|^2 dt")->capture_default_str();
    cmd->add_option("--stages", stages, "number of mu_tilde stages")->capture_default_str();
    cmd->add_option("--max-inner", max_inner, "FISTA iteration cap")->capture_default_str();
    cmd->add_option("--min-inner", min_inner, "FISTA iterations before the stop test")->capture_default_str();
    cmd->add_option("--max-outer", max_outer, "alternations per stage")->capture_default_str();
    cmd->add_option("--deriv", deriv, "time derivative")->check(CLI::IsMember({"spectral", "fd"}))->capture_default_str();
  }

  // Schedule is filled per signal by schedule_for().
  [[nodiscard]] TycoonParams params() const {
    TycoonParams p;
    p.eps1 = eps1;
    p.eps2 = eps2;
    p.lambda_tilde = lambda_tilde;
    p.gamma = gamma;
    p.max_inner_iters = max_inner;
    p.min_inner_iters = min_inner;
    p.max_outer_iters = max_outer;
    p.deriv_method = deriv == "fd" ? DerivMethod::finite_difference : DerivMethod::spectral;
    return p;
  }

  [[nodiscard]] std::vector<Real> schedule_for(const SampledSignal& f) const {
    return default_mu_schedule(f, stages, mu_hi, mu_lo);
  }
};

struct SynthFlags {
  std::string benchmark = "two-component";
  unsigned long long seed = 1;
  double L = 80.0;
  double dt = 0.1;
  double sigma1 = 100.0;
  double sigma2 = 200.0;
  double sigma_if = BenchmarkConfig{}.sigma_if;
  double snr = std::numeric_limits<double>::infinity();
  std::string if_trace;
  std::string out = "signal";
};

int cmd_synth(const SynthFlags& s) {
  BenchmarkConfig cfg;
  cfg.L = s.L;
  cfg.dt = s.dt;
  cfg.sigma1 = s.sigma1;
  cfg.sigma2 = s.sigma2;
  cfg.sigma_if = s.sigma_if;
  RealVector trace;
  const RealVector* trace_ptr = nullptr;
  if (!s.if_trace.empty()) {
    const long n = std::lround(s.L / s.dt) + 1;
    trace = io::resample_if_trace(io::read_if_trace_csv(s.if_trace), static_cast<int>(n), s.dt);
    trace_ptr = &trace;
  }
  const auto bm = make_two_component_benchmark(cfg, s.seed, trace_ptr);
  io::write_signal_csv(s.out + ".csv", bm.f);
  io::write_truth_json(s.out + "_truth.json", {bm.f1, bm.f2}, bm.f.dt);
  std::cout << "wrote " << s.out << ".csv (" << bm.f.size() << " samples) and " << s.out << "_truth.json\n";
  if (!(std::isinf(s.snr) && s.snr > 0)) {
    const auto noisy = add_noise(bm.f, s.snr, s.seed + 1000003ULL);
    io::write_signal_csv(s.out + "_noisy.csv", noisy);
    std::cout << "wrote " << s.out << "_noisy.csv (SNR " << s.snr << " dB, noise std "
              << noise_std_for_snr(bm.f, s.snr) << ")\n";
  }
  return 0;
}

struct AnalyzeFlags {
  std::string input;
  std::string method = "tycoon";
  std::string out = "analysis";
  double window_sigma = 1.0;
  double threshold = -1.0;
  double noise_std = -1.0;
  SolverFlags solver;
};

int cmd_analyze(const AnalyzeFlags& a) {
  const SampledSignal f = io::read_signal_csv(a.input);
  const TFGrid grid = f.grid();
  if (a.method == "stft" || a.method == "sst") {
    const WindowSpec w{a.window_sigma};
    const TFMatrix F = a.method == "stft" ? stft_gauss(f, w, grid) : sst_stft(f, w, grid, a.threshold);
    io::write_tfr(a.out + ".tfr", F);
    std::cout << "wrote " << a.out << ".tfr (" << shape_string(grid) << ")\n";
    return 0;
  }
  TycoonParams p = a.solver.params();
  p.mu_schedule = a.solver.schedule_for(f);
  TycoonOptions opts;
  if (a.noise_std >= 0.0) opts.noise_std = a.noise_std;

  // Partial trace kept so a failed solve still leaves a record.
  SolveTrace partial;
  opts.on_outer = [&](int stage, const OuterRecord& rec) {
    while (static_cast<int>(partial.stages.size()) <= stage) {
      partial.stages.emplace_back();
      partial.stages.back().mu_tilde = p.mu_schedule[partial.stages.size() - 1];
    }
    partial.stages[static_cast<std::size_t>(stage)].outer.push_back(rec);
    partial.final_lipschitz = rec.lipschitz;
  };
  try {
    const auto res = solve(f, p, opts);
    io::write_tfr(a.out + ".tfr", res.F);
    io::write_alpha_csv(a.out + "_alpha.csv", res.alpha, f.dt);
    auto j = io::trace_to_json(res.trace);
    j["chosen_stage"] = res.chosen_stage;
    j["chosen_mu_tilde"] = res.chosen_mu_tilde;
    j["descent_violations"] = descent_violations(res.trace);
    io::write_json(a.out + "_trace.json", j);
    std::cout << "wrote " << a.out << ".tfr, " << a.out << "_alpha.csv, " << a.out << "_trace.json (stage "
              << res.chosen_stage << ", mu_tilde " << res.chosen_mu_tilde << ")\n";
  } catch (const SolverError&) {
    auto j = io::trace_to_json(partial);
    j["failed"] = true;
    io::write_json(a.out + "_trace.json", j);
    throw;
  }
  return 0;
}

struct EvalFlags {
  std::string tfr;
  std::string truth;
  std::string out = "eval";
};

int cmd_eval(const EvalFlags& e) {
  const TFMatrix F = io::read_tfr(e.tfr);
  const io::Truth truth = io::read_truth_json(e.truth);
  if (truth.components.empty()) throw ContractError(e.truth + ": no components");
  const TFGrid tg = make_grid(truth.components.front().size() - 1, truth.dt);
  if (!(tg.M == F.grid.M && std::abs(tg.dt - F.grid.dt) <= 1e-12 * tg.dt))
    throw ContractError("grid mismatch: TFR is " + shape_string(F.grid) + ", truth is " + shape_string(tg));
  const auto ideal = itvps(truth.components, F.grid);
  const auto d = d_metric(ideal.S, tvps_from_tfr(F));
  io::json j{{"D", d.value}, {"skipped_columns", d.skipped}, {"dropped_truth_samples", ideal.dropped}};
  io::write_json(e.out + ".json", j);
  FILE* csv = std::fopen((e.out + "_profile.csv").c_str(), "w");
  if (!csv) throw ContractError("cannot open '" + e.out + "_profile.csv' for writing");
  std::fprintf(csv, "t,ot_distance\n");
  for (int m = 0; m < F.grid.num_times(); ++m)
    if (std::isfinite(d.per_column(m))) std::fprintf(csv, "%.17g,%.17g\n", F.grid.time(m), d.per_column(m));
  std::fclose(csv);
  std::cout << "D = " << d.value << " (skipped columns: " << d.skipped << ")\n";
  return 0;
}

struct BenchFlags {
  int realizations = 10;
  unsigned long long seed = 1;
  double L = 40.0;
  double dt = 0.1;
  double sigma_if = BenchmarkConfig{}.sigma_if;
  double snr = std::numeric_limits<double>::infinity();
  double window_sigma = 1.0;
  int threads = 0;
  std::string out;
  SolverFlags solver;
};

int cmd_bench(const BenchFlags& b) {
  if (b.realizations < 2) throw ContractError("bench: need at least 2 realizations");
  BenchConfig cfg;
  cfg.realizations = b.realizations;
  cfg.base_seed = b.seed;
  cfg.signal.L = b.L;
  cfg.signal.dt = b.dt;
  cfg.signal.sigma_if = b.sigma_if;
  cfg.snr_db = b.snr;
  cfg.window_sigma = b.window_sigma;
  cfg.params = b.solver.params();
  cfg.threads = b.threads > 0 ? b.threads : default_thread_count();
  if (b.solver.stages != 4 || b.solver.mu_hi != 1e-2 || b.solver.mu_lo != 1e-5) {
    // Explicit schedules are relative to each realization's energy; use a representative one.
    const auto bm = make_two_component_benchmark(cfg.signal, cfg.base_seed);
    cfg.params.mu_schedule = b.solver.schedule_for(bm.f);
  }
  const auto rep = run_bench(cfg);

  const bool noisy = !(std::isinf(b.snr) && b.snr > 0);
  std::printf("realizations: %d (failed %d), L=%g dt=%g%s\n", b.realizations,
              b.realizations - rep.tycoon.count, b.L, b.dt, noisy ? (" SNR " + std::to_string(b.snr) + " dB").c_str() : "");
  std::printf("%-10s %10s %10s\n", "method", "mean D", "std D");
  std::printf("%-10s %10.3f %10.3f\n", "tycoon", rep.tycoon.mean, rep.tycoon.std);
  std::printf("%-10s %10.3f %10.3f\n", "stft", rep.stft.mean, rep.stft.std);
  std::printf("%-10s %10.3f %10.3f\n", "sst-stft", rep.sst.mean, rep.sst.std);
  std::printf("ordering: tycoon < stft: %s, tycoon < sst-stft: %s\n", rep.tycoon_beats_stft() ? "yes" : "no",
              rep.tycoon_beats_sst() ? "yes" : "no");
  std::printf("full-scale reference values (L=80, 100 realizations):\n");
  for (const auto& r : noisy ? reference_noisy() : reference_noise_free())
    std::printf("  %-10s %6.2f +- %.2f\n", r.method, r.mean, r.std);
  for (const auto& r : rep.runs)
    if (!r.ok) std::printf("realization seed %llu failed: %s\n", r.seed, r.error.c_str());

  if (!b.out.empty()) {
    io::json j;
    j["tycoon"] = {{"mean", rep.tycoon.mean}, {"std", rep.tycoon.std}, {"count", rep.tycoon.count}};
    j["stft"] = {{"mean", rep.stft.mean}, {"std", rep.stft.std}, {"count", rep.stft.count}};
    j["sst_stft"] = {{"mean", rep.sst.mean}, {"std", rep.sst.std}, {"count", rep.sst.count}};
    j["runs"] = io::json::array();
    for (const auto& r : rep.runs)
      j["runs"].push_back({{"seed", r.seed}, {"ok", r.ok}, {"error", r.error}, {"tycoon", r.d_tycoon},
                           {"stft", r.d_stft}, {"sst_stft", r.d_sst}, {"tycoon_seconds", r.seconds_tycoon},
                           {"descent_violations", r.descent_violations}});
    j["reference"] = io::json::array();
    for (const auto& r : noisy ? reference_noisy() : reference_noise_free())
      j["reference"].push_back({{"method", r.method}, {"mean", r.mean}, {"std", r.std}});
    io::write_json(b.out, j);
  }
  return 0;
}

struct RenderFlags {
  std::string tfr;
  std::string out = "tfr.pgm";
  double quantile = 0.999;
  std::string truth;
};

int cmd_render(const RenderFlags& r) {
  const TFMatrix F = io::read_tfr(r.tfr);
  io::write_pgm(r.out, compress_dynamic_range(tvps_from_tfr(F), r.quantile));
  std::cout << "wrote " << r.out << " (" << F.grid.num_freqs() << " rows x " << F.grid.num_times() << " columns)\n";
  if (!r.truth.empty()) {
    const auto truth = io::read_truth_json(r.truth);
    const std::string path = r.out + "_if.csv";
    FILE* csv = std::fopen(path.c_str(), "w");
    if (!csv) throw ContractError("cannot open '" + path + "' for writing");
    std::fprintf(csv, "t,component,instantaneous_frequency_hz\n");
    for (std::size_t k = 0; k < truth.components.size(); ++k) {
      const auto& c = truth.components[k];
      if (c.support_length() < 2) continue;
      const RealVector inst = detail::gradient(c.phase.segment(c.support_begin, c.support_length()), truth.dt);
      for (int m = c.support_begin; m <= c.support_end; ++m)
        std::fprintf(csv, "%.17g,%zu,%.17g\n", m * truth.dt, k, inst(m - c.support_begin));
    }
    std::fclose(csv);
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tycoon time-frequency analysis"};
  app.require_subcommand(1);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "generate a benchmark signal and its ground truth");
  synth->add_option("--benchmark", sf.benchmark)->check(CLI::IsMember({"two-component"}))->capture_default_str();
  synth->add_option("--seed", sf.seed)->capture_default_str();
  synth->add_option("--L", sf.L, "duration in seconds")->capture_default_str();
  synth->add_option("--dt", sf.dt, "sampling period")->capture_default_str();
  synth->add_option("--sigma1", sf.sigma1, "amplitude smoothing (samples)")->capture_default_str();
  synth->add_option("--sigma2", sf.sigma2, "phase smoothing of f2 (samples)")->capture_default_str();
  synth->add_option("--sigma-if", sf.sigma_if, "IF smoothing of f1 (samples)")->capture_default_str();
  synth->add_option("--snr", sf.snr, "also write a noisy copy at this SNR (dB)");
  synth->add_option("--if-trace", sf.if_trace, "CSV t,instantaneous_frequency_hz used as the IF of f1")->check(CLI::ExistingFile);
  synth->add_option("--out", sf.out, "output prefix")->capture_default_str();

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "compute a time-frequency representation");
  analyze->add_option("--input", af.input, "signal CSV t,value")->required()->check(CLI::ExistingFile);
  analyze->add_option("--method", af.method)->check(CLI::IsMember({"tycoon", "stft", "sst"}))->capture_default_str();
  analyze->add_option("--out", af.out, "output prefix")->capture_default_str();
  analyze->add_option("--window-sigma", af.window_sigma, "Gaussian window std (seconds)")->capture_default_str();
  analyze->add_option("--threshold", af.threshold, "SST magnitude threshold (negative: relative default)");
  analyze->add_option("--noise-std", af.noise_std, "noise std for the discrepancy principle");
  af.solver.add(analyze);

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "D metric of a TFR against the ground truth");
  eval->add_option("--tfr", ef.tfr)->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", ef.truth)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ef.out, "output prefix")->capture_default_str();

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Monte-Carlo D comparison of tycoon, stft and sst");
  bench->add_option("--realizations", bf.realizations)->capture_default_str();
  bench->add_option("--seed", bf.seed, "base seed")->capture_default_str();
  bench->add_option("--L", bf.L)->capture_default_str();
  bench->add_option("--dt", bf.dt)->capture_default_str();
  bench->add_option("--sigma-if", bf.sigma_if)->capture_default_str();
  bench->add_option("--snr", bf.snr, "SNR in dB (default: noise-free)");
  bench->add_option("--window-sigma", bf.window_sigma)->capture_default_str();
  bench->add_option("--threads", bf.threads, "worker threads (default: TYCOON_THREADS or all cores)");
  bench->add_option("--out", bf.out, "JSON report path");
  bf.solver.add(bench);

  RenderFlags rf;
  auto* render = app.add_subcommand("render", "write a TFR as an 8-bit PGM image");
  render->add_option("--tfr", rf.tfr)->required()->check(CLI::ExistingFile);
  render->add_option("--out", rf.out)->capture_default_str();
  render->add_option("--quantile", rf.quantile, "clipping quantile")->capture_default_str();
  render->add_option("--truth", rf.truth, "also write the true IF curves as CSV")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(sf);
    if (*analyze) return cmd_analyze(af);
    if (*eval) return cmd_eval(ef);
    if (*bench) return cmd_bench(bf);
    if (*render) return cmd_render(rf);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
