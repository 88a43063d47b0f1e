#pragma once

// File formats: signal / IF-trace / alpha CSV, TFR binary, truth and trace
// JSON, binary PGM.

#include "tycoon/metrics.hpp"
#include "tycoon/solver.hpp"
#include "tycoon/synth.hpp"
#include "tycoon/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tycoon::io {

using json = nlohmann::json;

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ContractError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ContractError("cannot open '" + path + "' for reading");
  return in;
}

inline std::string fmt(Real x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Reads a two-column CSV with a header line. Returns the header and columns.
inline std::pair<std::string, std::array<std::vector<Real>, 2>> read_two_columns(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw ContractError(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::array<std::vector<Real>, 2> cols;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ContractError(path + ":" + std::to_string(lineno) + ": expected two columns");
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      cols[0].push_back(std::stod(a, &used));
      cols[1].push_back(std::stod(b, &used));
    } catch (const std::exception&) {
      throw ContractError(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return {header, cols};
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ContractError(path + ": truncated TFR file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ContractError(path + ": truncated TFR file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::vector<Real> to_vec(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

inline RealVector from_vec(const std::vector<Real>& v) {
  return Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// `t,value` with t = m*dt.
inline void write_signal_csv(const std::string& path, const SampledSignal& f) {
  auto out = detail::open_out(path);
  out << "t,value\n";
  for (int m = 0; m < f.size(); ++m) out << detail::fmt(m * f.dt) << ',' << detail::fmt(f.samples(m)) << '\n';
  if (!out) throw ContractError("write failed: " + path);
}

/// Reads `t,value`; the time axis must be uniform (relative tolerance 1e-6).
inline SampledSignal read_signal_csv(const std::string& path) {
  auto [header, cols] = detail::read_two_columns(path);
  const auto& t = cols[0];
  if (t.size() < 5) throw ContractError(path + ": need at least 5 samples");
  const Real dt = (t.back() - t.front()) / static_cast<Real>(t.size() - 1);
  if (!(dt > 0.0)) throw ContractError(path + ": time column must increase");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt) throw ContractError(path + ": time column is not uniform");
  SampledSignal f(detail::from_vec(cols[1]), dt);
  f.check();
  return f;
}

struct IfTrace {
  std::vector<Real> t;
  std::vector<Real> freq_hz;
};

/// `t,instantaneous_frequency_hz`, strictly increasing t.
inline IfTrace read_if_trace_csv(const std::string& path) {
  auto [header, cols] = detail::read_two_columns(path);
  if (header.find("instantaneous_frequency_hz") == std::string::npos)
    throw ContractError(path + ": header must be t,instantaneous_frequency_hz");
  IfTrace tr{cols[0], cols[1]};
  for (std::size_t i = 1; i < tr.t.size(); ++i)
    if (!(tr.t[i] > tr.t[i - 1])) throw ContractError(path + ": t must increase strictly");
  return tr;
}

/// IF trace resampled on t_m = m*dt, m = 0..n-1, by a natural cubic spline.
inline RealVector resample_if_trace(const IfTrace& tr, int n, Real dt) {
  RealVector at(n);
  for (int m = 0; m < n; ++m) at(m) = tr.t.front() + m * dt;
  return natural_spline(tr.t, tr.freq_hz, at);
}

inline void write_alpha_csv(const std::string& path, const ChirpTrack& a, Real dt) {
  auto out = detail::open_out(path);
  out << "t,alpha\n";
  for (Eigen::Index m = 0; m < a.values.size(); ++m) out << detail::fmt(m * dt) << ',' << detail::fmt(a.values(m)) << '\n';
}

inline constexpr std::array<char, 4> kTfrMagic{'T', 'Y', 'C', 'N'};
inline constexpr std::uint32_t kTfrVersion = 1;

/// Little-endian: magic, u32 version, u32 rows, u32 cols, f64 dt, f64 dw,
/// then row-major (re, im) f64 pairs.
inline void write_tfr(const std::string& path, const TFMatrix& F) {
  F.check();
  auto out = detail::open_out(path, true);
  out.write(kTfrMagic.data(), 4);
  detail::put_u32(out, kTfrVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(F.values.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(F.values.cols()));
  detail::put_f64(out, F.grid.dt);
  detail::put_f64(out, F.grid.dw);
  for (Eigen::Index n = 0; n < F.values.rows(); ++n)
    for (Eigen::Index m = 0; m < F.values.cols(); ++m) {
      detail::put_f64(out, F.values(n, m).real());
      detail::put_f64(out, F.values(n, m).imag());
    }
  if (!out) throw ContractError("write failed: " + path);
}

inline TFMatrix read_tfr(const std::string& path) {
  auto in = detail::open_in(path, true);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kTfrMagic) throw ContractError(path + ": not a TFR file");
  const auto version = detail::get_u32(in, path);
  if (version != kTfrVersion) throw ContractError(path + ": unsupported TFR version " + std::to_string(version));
  const auto rows = detail::get_u32(in, path);
  const auto cols = detail::get_u32(in, path);
  const double dt = detail::get_f64(in, path);
  const double dw = detail::get_f64(in, path);
  if (cols < 5) throw ContractError(path + ": too few columns");
  TFGrid g = make_grid(static_cast<int>(cols) - 1, dt);
  if (static_cast<std::uint32_t>(g.num_freqs()) != rows)
    throw ContractError(path + ": rows do not match the grid implied by cols");
  g.dw = dw;
  TFMatrix F(g);
  for (std::uint32_t n = 0; n < rows; ++n)
    for (std::uint32_t m = 0; m < cols; ++m) {
      const double re = detail::get_f64(in, path);
      const double im = detail::get_f64(in, path);
      F.values(n, m) = Complex(re, im);
    }
  return F;
}

inline json truth_to_json(const std::vector<GIMTComponent>& comps, Real dt) {
  json j;
  j["dt"] = dt;
  j["num_samples"] = comps.empty() ? 0 : comps.front().size();
  j["components"] = json::array();
  for (const auto& c : comps)
    j["components"].push_back({{"amp", detail::to_vec(c.amp)},
                               {"phase", detail::to_vec(c.phase)},
                               {"support", {c.support_begin, c.support_end}}});
  return j;
}

struct Truth {
  Real dt = 0.0;
  std::vector<GIMTComponent> components;
};

inline void write_truth_json(const std::string& path, const std::vector<GIMTComponent>& comps, Real dt) {
  auto out = detail::open_out(path);
  out << truth_to_json(comps, dt).dump(1) << '\n';
}

inline Truth read_truth_json(const std::string& path) {
  auto in = detail::open_in(path);
  Truth t;
  try {
    const json j = json::parse(in);
    t.dt = j.at("dt").get<Real>();
    for (const auto& jc : j.at("components")) {
      GIMTComponent c;
      c.amp = detail::from_vec(jc.at("amp").get<std::vector<Real>>());
      c.phase = detail::from_vec(jc.at("phase").get<std::vector<Real>>());
      c.support_begin = jc.at("support").at(0).get<int>();
      c.support_end = jc.at("support").at(1).get<int>();
      c.check();
      t.components.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ContractError(path + ": malformed truth file: " + e.what());
  }
  return t;
}

inline json value_to_json(const FunctionalValue& h) {
  return {{"total", h.total},
          {"data", h.data_term},
          {"transport", h.transport_term},
          {"l1", h.l1_term},
          {"alpha", h.alpha_term}};
}

inline json trace_to_json(const SolveTrace& tr) {
  json j;
  j["final_lipschitz"] = tr.final_lipschitz;
  j["stages"] = json::array();
  for (const auto& st : tr.stages) {
    json js;
    js["mu_tilde"] = st.mu_tilde;
    js["H_start"] = st.H_start;
    js["converged"] = st.converged;
    js["outer"] = json::array();
    for (const auto& o : st.outer)
      js["outer"].push_back({{"inner_iterations", o.inner_iterations},
                             {"inner_converged", o.inner_converged},
                             {"lipschitz", o.lipschitz},
                             {"lipschitz_converged", o.lipschitz_converged},
                             {"H_after_fista", o.H_after_fista},
                             {"H", value_to_json(o.H)},
                             {"rel_change_F", o.rel_change_F},
                             {"rel_change_alpha", o.rel_change_alpha}});
    j["stages"].push_back(std::move(js));
  }
  return j;
}

inline void write_json(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(1) << '\n';
}

/// 8-bit binary PGM; row 0 of the image is the highest frequency bin.
inline void write_pgm(const std::string& path, const RealMatrix& img01) {
  auto out = detail::open_out(path, true);
  const Eigen::Index rows = img01.rows(), cols = img01.cols();
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::vector<unsigned char> line(static_cast<std::size_t>(cols));
  for (Eigen::Index r = rows - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < cols; ++c)
      line[static_cast<std::size_t>(c)] =
          static_cast<unsigned char>(std::lround(255.0 * std::clamp(img01(r, c), 0.0, 1.0)));
    out.write(reinterpret_cast<const char*>(line.data()), cols);
  }
  if (!out) throw ContractError("write failed: " + path);
}

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;  // row-major as stored
};

inline Pgm read_pgm(const std::string& path) {
  auto in = detail::open_in(path, true);
  std::string magic;
  int maxval = 0;
  Pgm p;
  in >> magic >> p.width >> p.height >> maxval;
  if (magic != "P5" || maxval != 255 || p.width <= 0 || p.height <= 0) throw ContractError(path + ": not an 8-bit P5 image");
  in.get();
  p.pixels.resize(static_cast<std::size_t>(p.width) * static_cast<std::size_t>(p.height));
  if (!in.read(reinterpret_cast<char*>(p.pixels.data()), static_cast<std::streamsize>(p.pixels.size())))
    throw ContractError(path + ": truncated image");
  return p;
}

}  // namespace tycoon::io
