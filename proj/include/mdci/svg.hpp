#pragma once

// Static SVG 1.1 line plots: one file per metric, one panel per design cell,
// one polyline per method. No interactivity, fixed-precision coordinates.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace mdci {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x, y;
};

struct SvgPanel {
  std::string title;
  std::vector<SvgSeries> series;
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

inline void write_svg_panels(const std::string& path, const std::vector<SvgPanel>& panels,
                             const std::string& x_label, const std::string& y_label,
                             double y_min_hint = 0.0, double y_max_hint = -1.0) {
  const int pw = 320, ph = 280, ml = 52, mr = 14, mt = 30, mb = 42;
  const int n = static_cast<int>(panels.size());
  const int width = n * pw + 10, height = ph + 60;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open SVG for writing: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int p = 0; p < n; ++p) {
    const SvgPanel& panel = panels[p];
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : panel.series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    if (y_max_hint > y_min_hint) {
      ymin = y_min_hint;
      ymax = y_max_hint;
    } else {
      if (!(ymax > ymin)) ymax = ymin + 1.0;
      const double pad = 0.06 * (ymax - ymin);
      ymin -= pad;
      ymax += pad;
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    const double x0 = p * pw + ml, x1 = p * pw + pw - mr;
    const double y0 = mt + ph - mb, y1 = mt;
    auto sx = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * (x1 - x0); };
    auto sy = [&](double v) { return y0 - (v - ymin) / (ymax - ymin) * (y0 - y1); };

    out << "<rect x=\"" << detail::fmt2(x0) << "\" y=\"" << detail::fmt2(y1) << "\" width=\""
        << detail::fmt2(x1 - x0) << "\" height=\"" << detail::fmt2(y0 - y1)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << detail::fmt2(0.5 * (x0 + x1)) << "\" y=\"" << detail::fmt2(y1 - 10.0)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
        << panel.title << "</text>\n";

    for (int t = 0; t <= 4; ++t) {
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      const double yv = ymin + (ymax - ymin) * t / 4.0;
      out << "<line x1=\"" << detail::fmt2(sx(xv)) << "\" y1=\"" << detail::fmt2(y0) << "\" x2=\""
          << detail::fmt2(sx(xv)) << "\" y2=\"" << detail::fmt2(y0 + 4.0)
          << "\" stroke=\"#333\"/>\n";
      out << "<text x=\"" << detail::fmt2(sx(xv)) << "\" y=\"" << detail::fmt2(y0 + 16.0)
          << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
          << detail::fmt_tick(xv) << "</text>\n";
      out << "<line x1=\"" << detail::fmt2(x0 - 4.0) << "\" y1=\"" << detail::fmt2(sy(yv))
          << "\" x2=\"" << detail::fmt2(x0) << "\" y2=\"" << detail::fmt2(sy(yv))
          << "\" stroke=\"#333\"/>\n";
      out << "<text x=\"" << detail::fmt2(x0 - 6.0) << "\" y=\"" << detail::fmt2(sy(yv) + 3.0)
          << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
          << detail::fmt_tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << detail::fmt2(0.5 * (x0 + x1)) << "\" y=\""
        << detail::fmt2(y0 + 32.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    if (p == 0)
      out << "<text x=\"14\" y=\"" << detail::fmt2(0.5 * (y0 + y1))
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 14 "
          << detail::fmt2(0.5 * (y0 + y1)) << ")\">" << y_label << "</text>\n";

    for (const auto& s : panel.series) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) out << ' ';
        out << detail::fmt2(sx(s.x[i])) << ',' << detail::fmt2(sy(s.y[i]));
      }
      out << "\"/>\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << detail::fmt2(sx(s.x[i])) << "\" cy=\""
            << detail::fmt2(sy(s.y[i])) << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
    }
  }

  // legend from the first panel
  if (!panels.empty()) {
    double lx = 10.0;
    const double ly = mt + ph - 6.0 + 24.0;
    for (const auto& s : panels.front().series) {
      out << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ly) << "\" x2=\""
          << detail::fmt2(lx + 22.0) << "\" y2=\"" << detail::fmt2(ly) << "\" stroke=\""
          << s.color << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << detail::fmt2(lx + 26.0) << "\" y=\"" << detail::fmt2(ly + 4.0)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
      lx += 26.0 + 10.0 * s.label.size() + 16.0;
    }
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace mdci
