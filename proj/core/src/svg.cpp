#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tlreg/harness.hpp"

namespace tlreg {

namespace {

// Curve colors follow the usual convention of these figures.
const char* estimator_color(EstimatorId id) {
  switch (id) {
    case EstimatorId::mltn: return "#d62728";   // red
    case EstimatorId::ridge: return "#2ca02c";  // green
    case EstimatorId::tl: return "#1f77b4";     // blue
    case EstimatorId::lmmse: return "#9467bd";  // purple
  }
  return "#000000";
}

struct PlotBox {
  double left = 70, right = 590, top = 24, bottom = 440;
  double width() const { return right - left; }
  double height() const { return bottom - top; }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct AxisMap {
  double lo = 0.1, hi = 10.0;
  bool log = true;
  double to_unit(double v) const {
    if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

class SvgWriter {
 public:
  explicit SvgWriter(PlotBox box) : box_(box) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"500\" "
             "viewBox=\"0 0 760 500\">\n";
    body_ << "<rect x=\"0\" y=\"0\" width=\"760\" height=\"500\" fill=\"white\"/>\n";
  }

  void frame() {
    body_ << "<rect x=\"" << num(box_.left) << "\" y=\"" << num(box_.top) << "\" width=\""
          << num(box_.width()) << "\" height=\"" << num(box_.height())
          << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  }

  void title(const std::string& text) {
    body_ << "<text x=\"" << num(box_.left + box_.width() / 2) << "\" y=\"16\" font-size=\"13\" "
             "text-anchor=\"middle\" font-family=\"sans-serif\">"
          << text << "</text>\n";
  }

  void x_tick(double unit, const std::string& label) {
    const double x = box_.left + unit * box_.width();
    body_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(box_.bottom) << "\" x2=\"" << num(x)
          << "\" y2=\"" << num(box_.bottom + 5) << "\" stroke=\"#333333\"/>\n";
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(box_.bottom + 18)
          << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << label
          << "</text>\n";
  }

  void y_tick(double unit, const std::string& label) {
    const double y = box_.bottom - unit * box_.height();
    body_ << "<line x1=\"" << num(box_.left - 5) << "\" y1=\"" << num(y) << "\" x2=\""
          << num(box_.left) << "\" y2=\"" << num(y) << "\" stroke=\"#333333\"/>\n";
    body_ << "<text x=\"" << num(box_.left - 8) << "\" y=\"" << num(y + 4)
          << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << label
          << "</text>\n";
  }

  void axis_labels(const std::string& x_label, const std::string& y_label) {
    body_ << "<text x=\"" << num(box_.left + box_.width() / 2) << "\" y=\"478\" font-size=\"12\" "
             "text-anchor=\"middle\" font-family=\"sans-serif\">"
          << x_label << "</text>\n";
    body_ << "<text x=\"16\" y=\"" << num(box_.top + box_.height() / 2)
          << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "transform=\"rotate(-90 16 "
          << num(box_.top + box_.height() / 2) << ")\">" << y_label << "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& unit_points, const char* color) {
    if (unit_points.size() < 2) {
      if (unit_points.size() == 1) marker(unit_points[0].first, unit_points[0].second, color, false);
      return;
    }
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (const auto& [ux, uy] : unit_points)
      body_ << num(box_.left + ux * box_.width()) << ',' << num(box_.bottom - uy * box_.height())
            << ' ';
    body_ << "\"/>\n";
  }

  void marker(double ux, double uy, const char* color, bool with_bar, double bar_lo = 0,
              double bar_hi = 0) {
    const double x = box_.left + ux * box_.width();
    if (with_bar) {
      body_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(box_.bottom - bar_lo * box_.height())
            << "\" x2=\"" << num(x) << "\" y2=\"" << num(box_.bottom - bar_hi * box_.height())
            << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    }
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(box_.bottom - uy * box_.height())
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }

  void asymptote(double ux, const char* color) {
    const double x = box_.left + ux * box_.width();
    body_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(box_.top) << "\" x2=\"" << num(x)
          << "\" y2=\"" << num(box_.bottom) << "\" stroke=\"" << color
          << "\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  void legend(const std::vector<EstimatorId>& ids) {
    double y = box_.top + 10;
    const double x = box_.right + 14;
    for (const auto id : ids) {
      body_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 26)
            << "\" y2=\"" << num(y) << "\" stroke=\"" << estimator_color(id)
            << "\" stroke-width=\"2\"/>\n";
      body_ << "<text x=\"" << num(x + 32) << "\" y=\"" << num(y + 4)
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << to_string(id) << "</text>\n";
      y += 20;
    }
  }

  std::string finish() {
    body_ << "</svg>\n";
    return body_.str();
  }

 private:
  PlotBox box_;
  std::ostringstream body_;
};

std::string eta_file_name(double eta) {
  std::string tag = num(eta);
  return "risk_eta_" + tag + ".svg";
}

void write_group(const std::string& path, const std::vector<RiskPoint>& group, bool x_log) {
  PlotBox box;
  SvgWriter svg(box);

  // Ranges over finite data.
  double x_lo = std::numeric_limits<double>::max(), x_hi = 0;
  double y_lo = std::numeric_limits<double>::max(), y_hi = 0;
  for (const auto& p : group) {
    if (p.gamma_tgt > 0) {
      x_lo = std::min(x_lo, p.gamma_tgt);
      x_hi = std::max(x_hi, p.gamma_tgt);
    }
    for (const double v : {p.analytic, p.empirical_mean}) {
      if (std::isfinite(v) && v > 0) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
    }
  }
  if (!(x_lo < x_hi)) {
    x_lo = 0.1;
    x_hi = 10.0;
  }
  if (!(y_lo < y_hi)) {
    y_lo = 0.01;
    y_hi = 1.0;
  }
  AxisMap xm{x_lo, x_hi, x_log};
  AxisMap ym{y_lo * 0.8, y_hi * 1.25, true};

  svg.frame();
  if (!group.empty()) svg.title("sigma_eta2 = " + num(group.front().sigma_eta2));

  // Decade ticks plus endpoints.
  for (double v : {x_lo, x_hi}) svg.x_tick(xm.to_unit(v), num(v));
  if (x_log) {
    for (int e = static_cast<int>(std::ceil(std::log10(x_lo))); std::pow(10.0, e) < x_hi; ++e)
      svg.x_tick(xm.to_unit(std::pow(10.0, e)), num(std::pow(10.0, e)));
  }
  for (int e = static_cast<int>(std::ceil(std::log10(ym.lo))); std::pow(10.0, e) <= ym.hi; ++e)
    svg.y_tick(ym.to_unit(std::pow(10.0, e)), num(std::pow(10.0, e)));
  svg.axis_labels("d / n", "risk");

  std::vector<EstimatorId> present;
  for (const auto id : {EstimatorId::mltn, EstimatorId::ridge, EstimatorId::tl, EstimatorId::lmmse}) {
    std::vector<RiskPoint> series;
    for (const auto& p : group)
      if (p.estimator == id) series.push_back(p);
    if (series.empty()) continue;
    present.push_back(id);
    std::sort(series.begin(), series.end(),
              [](const RiskPoint& a, const RiskPoint& b) { return a.d < b.d; });
    const char* color = estimator_color(id);

    // Analytic line, split at infinite-band points which become asymptotes.
    std::vector<std::pair<double, double>> segment;
    for (const auto& p : series) {
      if (std::isfinite(p.analytic) && p.analytic > 0) {
        segment.emplace_back(xm.to_unit(p.gamma_tgt),
                             std::clamp(ym.to_unit(p.analytic), 0.0, 1.0));
      } else {
        if (std::isinf(p.analytic)) svg.asymptote(xm.to_unit(p.gamma_tgt), color);
        svg.polyline(segment, color);
        segment.clear();
      }
    }
    svg.polyline(segment, color);

    for (const auto& p : series) {
      if (!std::isfinite(p.empirical_mean) || !(p.empirical_mean > 0)) continue;
      const double uy = std::clamp(ym.to_unit(p.empirical_mean), 0.0, 1.0);
      const double lo = std::clamp(
          ym.to_unit(std::max(p.empirical_mean - p.empirical_stderr, ym.lo * 0.5)), 0.0, 1.0);
      const double hi =
          std::clamp(ym.to_unit(p.empirical_mean + p.empirical_stderr), 0.0, 1.0);
      svg.marker(xm.to_unit(p.gamma_tgt), uy, color, true, lo, hi);
    }
  }
  svg.legend(present);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write svg: " + path);
  out << svg.finish();
  if (!out) throw IoError("svg write failed: " + path);
}

}  // namespace

std::vector<std::string> emit_svg(const std::vector<RiskPoint>& points, const std::string& out_dir,
                                  bool x_log) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  if (points.empty()) {
    const auto path = (std::filesystem::path(out_dir) / "risk.svg").string();
    write_group(path, {}, x_log);
    written.push_back(path);
    return written;
  }
  std::set<double> etas;
  for (const auto& p : points) etas.insert(p.sigma_eta2);
  for (const double eta : etas) {
    std::vector<RiskPoint> group;
    for (const auto& p : points)
      if (p.sigma_eta2 == eta) group.push_back(p);
    const auto path = (std::filesystem::path(out_dir) / eta_file_name(eta)).string();
    write_group(path, group, x_log);
    written.push_back(path);
  }
  return written;
}

}  // namespace tlreg
