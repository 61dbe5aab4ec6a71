#pragma once

// CSV trace files and SVG line plots of the estimation errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vae/diagnostics.hpp"
#include "vae/error.hpp"

namespace vae {

inline constexpr const char* kCsvHeader = "t,principal_angle_rad,werr_x,werr_y,werr_z,berr_x,berr_y,berr_z,V,U,T";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One row per sample, 17 significant digits, LF line endings.
inline void emit_csv(const std::vector<ErrorSample>& trace, const std::filesystem::path& path) {
  if (trace.empty()) throw Error(Errc::Io, "refusing to write empty trace to '" + path.string() + "'");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  out << kCsvHeader << '\n';
  for (const auto& s : trace) {
    const std::array<double, 11> row{s.t,           s.principal_angle, s.omega_err.x(), s.omega_err.y(),
                                     s.omega_err.z(), s.beta_err.x(),   s.beta_err.y(),  s.beta_err.z(),
                                     s.V,           s.U_pot,           s.T_kin};
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != 0) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

/// Inverse of emit_csv. bias_energy is not stored and is reconstructed as V − T − U.
inline std::vector<ErrorSample> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(Errc::Io, "'" + path.string() + "': unexpected header");
  }
  std::vector<ErrorSample> trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 11> v{};
    std::size_t col = 0;
    const char* p = line.c_str();
    while (col < v.size()) {
      char* end = nullptr;
      v[col++] = std::strtod(p, &end);
      if (end == p) break;
      p = end;
      if (*p == ',') ++p;
    }
    if (col != v.size() || *p != '\0') {
      throw Error(Errc::Io, "'" + path.string() + "' line " + std::to_string(lineno) + ": malformed row");
    }
    ErrorSample s;
    s.t = v[0];
    s.principal_angle = v[1];
    s.omega_err = Vector3(v[2], v[3], v[4]);
    s.beta_err = Vector3(v[5], v[6], v[7]);
    s.V = v[8];
    s.U_pot = v[9];
    s.T_kin = v[10];
    s.bias_energy = s.V - s.T_kin - s.U_pot;
    trace.push_back(s);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
  std::string id;
  std::string label;
  std::string color;
  std::vector<double> y;
};

namespace detail {

/// Tick step of 1, 2 or 5 times a power of ten giving about `target` ticks.
inline double nice_step(double span, int target = 6) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double f = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return f * mag;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-300 ? 0.0 : v);
  return buf;
}

}  // namespace detail

/// Self-contained SVG line plot. Each series group carries its final value
/// in a <desc> element at full precision.
inline std::string render_plot(const std::string& title, const std::string& y_label,
                               const std::vector<double>& t, const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 800, kHeight = 480;
  constexpr double kLeft = 90, kRight = 190, kTop = 50, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double t0 = t.front(), t1 = t.back();
  if (!(t1 > t0)) t1 = t0 + 1.0;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0.0 ? 0.1 * std::abs(lo) : 1.0;
    lo -= pad;
    hi += pad;
  }
  const double ystep = detail::nice_step(hi - lo);
  lo = std::floor(lo / ystep) * ystep;
  hi = std::ceil(hi / ystep) * ystep;
  const double tstep = detail::nice_step(t1 - t0);

  auto px = [&](double tv) { return kLeft + (tv - t0) / (t1 - t0) * plot_w; };
  auto py = [&](double yv) { return kTop + (hi - yv) / (hi - lo) * plot_h; };

  std::ostringstream o;
  o.precision(6);
  o << std::fixed;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<title>" << detail::svg_escape(title) << "</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
    << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"16\">" << detail::svg_escape(title) << "</text>\n";

  o << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\"/>\n</g>\n";

  o << "<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double tv = std::ceil(t0 / tstep) * tstep; tv <= t1 + 1e-9 * tstep; tv += tstep) {
    o << "<line x1=\"" << px(tv) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << px(tv) << "\" y2=\""
      << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << px(tv) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
      << detail::fmt_tick(tv) << "</text>\n";
  }
  for (double yv = lo; yv <= hi + 1e-9 * ystep; yv += ystep) {
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << py(yv) << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
      << detail::fmt_tick(yv) << "</text>\n";
  }
  o << "</g>\n";

  o << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">time t [s]</text>\n"
    << "<text x=\"20\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 20 " << kTop + plot_h / 2 << ")\">"
    << detail::svg_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<g id=\"series-" << s.id << "\">\n<desc>final=" << format_double(s.y.back()) << "</desc>\n"
      << "<path fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" d=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      o << (i == 0 ? 'M' : 'L') << px(t[i]) << ' ' << py(std::isfinite(s.y[i]) ? s.y[i] : lo) << ' ';
    }
    const double ly = kTop + 20 + 22.0 * static_cast<double>(k);
    o << "\"/>\n<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + plot_w + 40
      << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kLeft + plot_w + 45 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::svg_escape(s.label) << "</text>\n</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Writes principal_angle.svg, omega_error.svg and bias_error.svg into `dir`.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<ErrorSample>& trace,
                                                     const std::filesystem::path& dir) {
  if (trace.empty()) throw Error(Errc::Io, "refusing to plot empty trace");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + dir.string() + "': " + ec.message());

  std::vector<double> t;
  std::vector<double> angle;
  std::array<std::vector<double>, 3> werr, berr;
  for (const auto& s : trace) {
    t.push_back(s.t);
    angle.push_back(s.principal_angle);
    for (int k = 0; k < 3; ++k) {
      werr[k].push_back(s.omega_err[k]);
      berr[k].push_back(s.beta_err[k]);
    }
  }
  const std::array<const char*, 3> colors{"#1f77b4", "#d62728", "#2ca02c"};
  const std::array<const char*, 3> axes{"x", "y", "z"};
  auto components = [&](const std::array<std::vector<double>, 3>& data, const std::string& prefix) {
    std::vector<PlotSeries> out;
    for (int k = 0; k < 3; ++k) out.push_back({prefix + "_" + axes[k], prefix + " " + axes[k], colors[k], data[k]});
    return out;
  };

  const std::vector<std::pair<std::filesystem::path, std::string>> docs{
      {dir / "principal_angle.svg",
       render_plot("Principal angle of the attitude estimate error", "principal angle [rad]", t,
                   {{"principal_angle_rad", "angle", colors[0], angle}})},
      {dir / "omega_error.svg",
       render_plot("Angular velocity estimate error", "angular velocity error [rad/s]", t,
                   components(werr, "werr"))},
      {dir / "bias_error.svg",
       render_plot("Bias estimate error", "bias error [rad/s]", t, components(berr, "berr"))},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [path, body] : docs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
    out << body;
    if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace vae
