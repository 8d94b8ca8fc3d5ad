#pragma once

// CSV and SVG emission. Numbers use the shortest round-trip representation
// so rerunning an experiment reproduces files byte for byte.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dosps/analysis.hpp"
#include "dosps/harness/runner.hpp"

namespace dosps {

inline constexpr const char* kTrajectoryHeader = "replication,k,d_k,F_hat,F_stderr,n_active";
inline constexpr const char* kSummaryHeader = "k,D_mean,D_stderr,F_mean,F_stderr,mean_spread";
inline constexpr const char* kTraceHeader = "k,node,delta,ell,a,a_hat,f_tilde,beta,gamma,phi";
inline constexpr const char* kBoundsHeader =
    "k,theta,upsilon,psi,envelope_th3_a,envelope_th3_b,envelope_th4,w_bound,omega,status";

inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline std::string fmt_opt(const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); }

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<ReplicationResult>& reps) {
  out << kTrajectoryHeader << "\n";
  for (const auto& rep : reps) {
    for (const auto& r : rep.records) {
      out << r.replication << ',' << r.k << ',' << fmt_opt(r.d_k) << ',' << fmt_opt(r.F_hat) << ','
          << fmt_opt(r.F_stderr) << ',' << r.n_active << "\n";
    }
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    out << r.k << ',';
    if (r.D) {
      out << fmt_double(r.D->mean) << ',' << fmt_double(r.D->std_error);
    } else {
      out << ',';
    }
    out << ',';
    if (r.F) {
      out << fmt_double(r.F->mean) << ',' << fmt_double(r.F->std_error);
    } else {
      out << ',';
    }
    out << ',' << fmt_double(r.mean_spread) << "\n";
  }
}

inline void write_trace_csv(std::ostream& out, const std::vector<SlotUpdateRecord>& trace) {
  out << kTraceHeader << "\n";
  for (const auto& t : trace) {
    out << t.k << ',' << t.node << ",1," << t.ell << ',' << fmt_double(t.action) << ','
        << fmt_double(t.performed_action) << ',' << fmt_double(t.f_tilde) << ',' << fmt_double(t.step_beta)
        << ',' << fmt_double(t.step_gamma) << ',' << fmt_double(t.perturbation) << "\n";
  }
}

inline void write_bounds_csv(std::ostream& out, const std::vector<EnvelopePoint>& env,
                             const std::vector<BiasDiagnostics>& bias) {
  out << kBoundsHeader << "\n";
  for (std::size_t j = 0; j < env.size(); ++j) {
    const auto& e = env[j];
    out << e.k << ',' << fmt_double(e.theta) << ',' << fmt_double(e.upsilon) << ',' << fmt_double(e.psi) << ','
        << fmt_opt(e.th3_a) << ',' << fmt_opt(e.th3_b) << ',' << fmt_opt(e.th4) << ','
        << fmt_double(bias[j].w_bound) << ',' << fmt_double(bias[j].omega) << ',' << e.status << "\n";
  }
}

// ---------------------------------------------------------------------------
// SVG line charts.

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Self-contained SVG with one polyline per series. In log-log mode
/// nonpositive points are skipped.
inline std::string render_svg(const std::string& title, const std::vector<Series>& series, bool loglog,
                              const std::string& x_label = "k", const std::string& y_label = "") {
  constexpr double W = 720, H = 440, L = 70, R = 20, T = 40, B = 50;
  auto tx = [&](double v) { return loglog ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (loglog && (x <= 0 || y <= 0)) continue;
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, tx(y));
      y1 = std::max(y1, tx(y));
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (tx(y) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" viewBox=\"0 0 720 440\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"440\" fill=\"white\"/>\n";
  s += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + fmt_double(L) + "\" y=\"" + fmt_double(T) + "\" width=\"" + fmt_double(W - L - R) +
       "\" height=\"" + fmt_double(H - T - B) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  const std::string xl = loglog ? "log10 " + x_label : x_label;
  const std::string yl = loglog ? "log10 " + y_label : y_label;
  s += "<text x=\"" + fmt_double((W + L) / 2) + "\" y=\"" + fmt_double(H - 12) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(xl) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fmt_double(H / 2) + "\" transform=\"rotate(-90 16 " + fmt_double(H / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(yl) + "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    const double sx = L + (W - L - R) * t / 4.0;
    const double sy = H - B - (H - T - B) * t / 4.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3g", fx);
    std::snprintf(by, sizeof by, "%.3g", fy);
    s += "<text x=\"" + fmt_double(sx) + "\" y=\"" + fmt_double(H - B + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + bx + "</text>\n";
    s += "<text x=\"" + fmt_double(L - 6) + "\" y=\"" + fmt_double(sy + 3) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + by + "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* col = colors[i % 6];
    std::string pts;
    for (const auto& [x, y] : series[i].points) {
      if (loglog && (x <= 0 || y <= 0)) continue;
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      pts += buf;
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    s += "<text x=\"" + fmt_double(L + 10) + "\" y=\"" + fmt_double(T + 16 + 14.0 * static_cast<double>(i)) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + col + "\">" + xml_escape(series[i].label) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

struct OutputFlags {
  bool svg = true;
};

/// Writes trajectory.csv, summary.csv, optional trace_<r>.csv and charts
/// into `dir`.
inline void emit_outputs(const Dataset& ds, const std::filesystem::path& dir, const OutputFlags& flags = {}) {
  {
    auto out = open_output(dir / "trajectory.csv");
    write_trajectory_csv(out, ds.replications);
  }
  {
    auto out = open_output(dir / "summary.csv");
    write_summary_csv(out, ds.summary);
  }
  for (const auto& rep : ds.replications) {
    if (rep.trace.empty()) continue;
    auto out = open_output(dir / ("trace_" + std::to_string(rep.replication) + ".csv"));
    write_trace_csv(out, rep.trace);
  }
  if (!flags.svg) return;
  Series D{"D_k", {}}, F{"F_hat mean", {}};
  std::vector<Series> d_reps;
  for (const auto& r : ds.summary) {
    if (r.D) D.points.push_back({static_cast<double>(r.k), r.D->mean});
    if (r.F) F.points.push_back({static_cast<double>(r.k), r.F->mean});
  }
  for (const auto& rep : ds.replications) {
    if (d_reps.size() >= 6) break;
    Series s{"d_k rep " + std::to_string(rep.replication), {}};
    for (const auto& rec : rep.records) {
      if (rec.d_k) s.points.push_back({static_cast<double>(rec.k), *rec.d_k});
    }
    if (!s.points.empty()) d_reps.push_back(std::move(s));
  }
  if (!D.points.empty()) {
    auto out = open_output(dir / "D_k.svg");
    out << render_svg("Mean divergence D_k", {D}, true, "k", "D_k");
  }
  if (!d_reps.empty()) {
    auto out = open_output(dir / "d_k.svg");
    out << render_svg("Per-replication divergence d_k", d_reps, true, "k", "d_k");
  }
  if (!F.points.empty()) {
    auto out = open_output(dir / "F_k.svg");
    out << render_svg("Estimated global utility F", {F}, false, "k", "F_hat");
  }
}

}  // namespace dosps
