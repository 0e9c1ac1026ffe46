#include "specrank/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace specrank::report {

std::string Provenance::describe() const {
  std::string out = "config=" + config_checksum;
  for (const auto& [name, seed] : seeds) out += fmt::format(" seed.{}={}", name, seed);
  return out;
}

void write_csv_provenance(std::ostream& out, const Provenance& p) {
  out << "# specrank " << p.describe() << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void write_coefficients_csv(std::ostream& out, const stats::RegressionFit& fit) {
  out << "coefficient,beta,se,z,p\n";
  for (std::size_t j = 0; j < fit.beta.size(); ++j) {
    out << fit.coefficient_names[j] << ',' << format_number(fit.beta[j]) << ','
        << format_number(fit.std_err[j]) << ',' << format_number(fit.z[j]) << ','
        << format_number(fit.p_values[j]) << '\n';
  }
}

void write_cdf_csv(std::ostream& out, std::span<const CdfPoint> cdf) {
  out << "rank,cum_prop\n";
  for (const auto& p : cdf) out << format_number(p.rank) << ',' << format_number(p.cumulative) << '\n';
}

void write_binned_csv(std::ostream& out,
                      const std::map<Condition, std::vector<stats::LengthBin>>& bins) {
  out << "condition,bin_center,mean_rank,ci_low,ci_high,n\n";
  for (const auto& [condition, rows] : bins) {
    for (const auto& b : rows) {
      out << condition.name() << ',' << format_number(b.bin_center) << ','
          << format_number(b.mean_rank) << ',' << format_number(b.ci_low) << ','
          << format_number(b.ci_high) << ',' << b.n << '\n';
    }
  }
}

namespace {

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

std::string escape(const std::string& s) {
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

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v, double pixel_lo, double pixel_hi) const {
    const double a = log ? std::log10(std::max(v, 1e-12)) : v;
    const double l = log ? std::log10(std::max(lo, 1e-12)) : lo;
    const double h = log ? std::log10(std::max(hi, 1e-12)) : hi;
    const double t = h > l ? (a - l) / (h - l) : 0.5;
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

std::string header(const ChartSpec& spec, const Provenance& provenance) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"11\">\n",
      spec.width, spec.height, spec.width, spec.height);
  s += "<!-- specrank " + escape(provenance.describe()) + " -->\n";
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", spec.width, spec.height);
  s += fmt::format("<text x=\"{:.2f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   spec.width / 2.0, escape(spec.title));
  return s;
}

std::string axes(const ChartSpec& spec, const Axis& x, const Axis& y) {
  const double x0 = kLeft, x1 = spec.width - kRight, y0 = spec.height - kBottom, y1 = kTop;
  std::string s = fmt::format(
      "<path d=\"M{:.2f},{:.2f} L{:.2f},{:.2f} L{:.2f},{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
      x0, y1, x0, y0, x1, y0);
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    double xv = x.log ? std::pow(10.0, std::log10(std::max(x.lo, 1e-12)) +
                                           t * (std::log10(std::max(x.hi, 1e-12)) -
                                                std::log10(std::max(x.lo, 1e-12))))
                      : x.lo + t * (x.hi - x.lo);
    const double px = x.map(xv, x0, x1);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", px,
                     y0 + 15, xv);
    const double yv = y.lo + t * (y.hi - y.lo);
    const double py = y.map(yv, y0, y1);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", x0 - 5,
                     py + 4, yv);
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                   (x0 + x1) / 2, static_cast<double>(spec.height) - 12, escape(spec.x_label));
  s += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">{}"
      "</text>\n",
      (y0 + y1) / 2, (y0 + y1) / 2, escape(spec.y_label));
  return s;
}

}  // namespace

std::string render_line_chart(const ChartSpec& spec, std::span<const Series> series,
                              const Provenance& provenance) {
  Axis x{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), spec.log_x};
  Axis y{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), false};
  for (const auto& s : series) {
    for (double v : s.x) x.lo = std::min(x.lo, v), x.hi = std::max(x.hi, v);
    for (double v : s.y) y.lo = std::min(y.lo, v), y.hi = std::max(y.hi, v);
    for (double v : s.y_low) y.lo = std::min(y.lo, v);
    for (double v : s.y_high) y.hi = std::max(y.hi, v);
  }
  if (x.lo > x.hi) x = {0, 1, spec.log_x};
  if (y.lo > y.hi) y = {0, 1, false};
  if (spec.step) y.lo = std::min(y.lo, 0.0);

  const double x0 = kLeft, x1 = spec.width - kRight, y0 = spec.height - kBottom, y1 = kTop;
  std::string svg = header(spec, provenance) + axes(spec, x, y);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.y_low.empty() && s.y_low.size() == s.x.size() && s.y_high.size() == s.x.size()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        pts += fmt::format("{:.2f},{:.2f} ", x.map(s.x[i], x0, x1), y.map(s.y_high[i], y0, y1));
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        pts += fmt::format("{:.2f},{:.2f} ", x.map(s.x[i], x0, x1), y.map(s.y_low[i], y0, y1));
      }
      svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                         pts, color);
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = x.map(s.x[i], x0, x1);
      if (spec.step && i > 0) pts += fmt::format("{:.2f},{:.2f} ", px, y.map(s.y[i - 1], y0, y1));
      pts += fmt::format("{:.2f},{:.2f} ", px, y.map(s.y[i], y0, y1));
    }
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                       pts, color);
    const double ly = kTop + 16.0 * static_cast<double>(k);
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"3\" fill=\"{}\"/>"
        "<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
        x1 + 12, ly - 3, color, x1 + 28, ly + 1, escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_bar_chart(const ChartSpec& spec, std::span<const Bar> bars,
                             const Provenance& provenance) {
  std::string svg = header(spec, provenance);
  const double x0 = 180, x1 = spec.width - 40.0;
  const double row = bars.empty() ? 0.0 : (spec.height - kTop - kBottom) / static_cast<double>(bars.size());
  const auto px = [&](double v) { return x0 + std::clamp(v, 0.0, 1.0) * (x1 - x0); };
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double top = kTop + row * static_cast<double>(i) + row * 0.2;
    const double h = row * 0.6;
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x0,
        top, px(b.value) - x0, h, kPalette[i % std::size(kPalette)]);
    svg += fmt::format(
        "<path d=\"M{:.2f},{:.2f} L{:.2f},{:.2f}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        px(b.low), top + h / 2, px(b.high), top + h / 2);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 6,
                       top + h / 2 + 4, escape(b.label));
  }
  const double mid = px(0.5);
  svg += fmt::format(
      "<path d=\"M{:.2f},{:.2f} L{:.2f},{:.2f}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n", mid,
      kTop, mid, static_cast<double>(spec.height) - kBottom);
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.2f}</text>\n",
                       px(v), static_cast<double>(spec.height) - kBottom + 15, v);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     (x0 + x1) / 2, static_cast<double>(spec.height) - 12, escape(spec.x_label));
  svg += "</svg>\n";
  return svg;
}

}  // namespace specrank::report
