#include "nvrelax/plot.hpp"

#include "nvrelax/errors.hpp"
#include "nvrelax/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace nvrelax {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 50;

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

}  // namespace

RenderedPlot render_trace_plot(const Trace& trace, const std::optional<FitResult>& fit,
                               int curve_samples) {
  if (trace.rows.empty()) throw ValidationError("cannot plot an empty trace");
  trace.validate();
  if (trace.rows.front().tau_s <= 0.0) throw ValidationError("log axis needs tau > 0");

  const double lx0 = std::floor(std::log10(trace.rows.front().tau_s));
  const double lx1 = std::ceil(std::log10(trace.rows.back().tau_s) + 1e-12);
  std::vector<std::pair<double, double>> curve;
  if (fit) {
    for (int k = 0; k < curve_samples; ++k) {
      const double lx = lx0 + (lx1 - lx0) * k / (curve_samples - 1);
      const double tau = std::pow(10.0, lx);
      curve.emplace_back(tau, exp_model(tau * 1e3, fit->params()));
    }
  }

  double y0 = 0.0, y1 = 0.0;
  for (const auto& r : trace.rows) {
    y0 = std::min(y0, r.signal - r.signal_err);
    y1 = std::max(y1, r.signal + r.signal_err);
  }
  for (const auto& [x, y] : curve) {
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (y1 - y0 <= 0.0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double tau) { return kLeft + pw * (std::log10(tau) - lx0) / (lx1 - lx0); };
  auto sy = [&](double y) { return kTop + ph * (y1 - y) / (y1 - y0); };

  RenderedPlot out;
  std::string& svg = out.svg;
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
             "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
             kWidth, kHeight, kWidth, kHeight);
  svg += fmt("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
             kLeft, kTop, pw, ph);
  for (double d = lx0; d <= lx1 + 1e-9; d += 1.0) {
    const double x = sx(std::pow(10.0, d));
    svg += fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>", x, kTop + ph, x,
               kTop + ph + 5);
    svg += fmt("<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">1e%g</text>\n", x, kTop + ph + 18, d);
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = y0 + (y1 - y0) * k / 4.0;
    svg += fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>", kLeft - 5, sy(v),
               kLeft, sy(v));
    svg += fmt("<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n", kLeft - 8, sy(v) + 4, v);
  }
  svg += fmt("<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">tau (s)</text>\n", kLeft + pw / 2,
             kHeight - 10);
  svg += fmt("<text transform=\"translate(16 %g) rotate(-90)\" text-anchor=\"middle\">"
             "(SIG1 - SIG2) / (SIG1 + SIG2)</text>\n",
             kTop + ph / 2);

  out.series_csv = "series,kind,x,y,yerr\n";
  svg += "<g id=\"data\" fill=\"steelblue\" stroke=\"steelblue\">\n";
  for (const auto& r : trace.rows) {
    const double x = sx(r.tau_s);
    svg += fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>", x, sy(r.signal - r.signal_err), x,
               sy(r.signal + r.signal_err));
    svg += fmt("<circle cx=\"%g\" cy=\"%g\" r=\"3\"/>\n", x, sy(r.signal));
    out.series_csv += "data,points," + format_double(r.tau_s) + ',' + format_double(r.signal) +
                      ',' + format_double(r.signal_err) + '\n';
  }
  svg += "</g>\n";

  if (fit) {
    svg += "<polyline id=\"fit\" fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.5\" points=\"";
    for (const auto& [tau, y] : curve) {
      svg += fmt("%.2f,%.2f ", sx(tau), sy(y));
      out.series_csv += "fit,curve," + format_double(tau) + ',' + format_double(y) + ",\n";
    }
    svg += "\"/>\n";
    svg += fmt("<text x=\"%g\" y=\"%g\" text-anchor=\"end\">T1 = %.4g +/- %.2g ms</text>\n",
               kLeft + pw - 8, kTop + 16, fit->t1, fit->t1_err);
  }
  svg += "</svg>\n";
  return out;
}

}  // namespace nvrelax
