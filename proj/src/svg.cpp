#include "wavesmooth/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "wavesmooth/analysis.hpp"

namespace wavesmooth {

namespace {

constexpr double kMaxSpeed = 35.0;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 20;
constexpr int kMarginBottom = 50;

double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Frame {
  double t0, t1, y0, y1;
  double px0, px1, py0, py1;

  [[nodiscard]] double x(double t) const { return px0 + (t - t0) / (t1 - t0) * (px1 - px0); }
  [[nodiscard]] double y(double pos) const { return py0 - (pos - y0) / (y1 - y0) * (py0 - py1); }
};

class Polyline {
 public:
  Polyline(std::string& out, std::string stroke, double width) : out_(out), stroke_(std::move(stroke)), width_(width) {}
  ~Polyline() { flush(); }
  Polyline(const Polyline&) = delete;
  Polyline& operator=(const Polyline&) = delete;

  void add(double x, double y) { pts_ += fmt::format("{}{:.2f},{:.2f}", pts_.empty() ? "" : " ", x, y), ++n_; }
  void flush() {
    if (n_ >= 2) {
      out_ += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{:.1f}\" points=\"{}\"/>\n", stroke_,
                          width_, pts_);
    }
    pts_.clear();
    n_ = 0;
  }
  void restroke(std::string stroke) { stroke_ = std::move(stroke); }

 private:
  std::string& out_;
  std::string stroke_;
  double width_;
  std::string pts_;
  int n_ = 0;
};

}  // namespace

std::string speed_color(double v) {
  const double f = std::clamp(std::isfinite(v) ? v / kMaxSpeed : 0.0, 0.0, 1.0);
  const auto r = static_cast<int>(std::lround(f < 0.5 ? 255.0 : 510.0 * (1.0 - f)));
  const auto g = static_cast<int>(std::lround(f < 0.5 ? 510.0 * f : 255.0));
  return fmt::format("#{:02x}{:02x}00", r, g);
}

std::string time_space_svg(const TrajectorySet& set, const DiagramOptions& opt) {
  double t0 = std::numeric_limits<double>::infinity();
  double t1 = -t0;
  double y0 = t0;
  double y1 = -t0;
  for (const Trajectory& tr : set.trajectories) {
    for (std::size_t k = 0; k < tr.size(); ++k) {
      t0 = std::min(t0, tr.t[k]);
      t1 = std::max(t1, tr.t[k]);
      y0 = std::min(y0, tr.y[k]);
      y1 = std::max(y1, tr.y[k]);
    }
  }
  if (opt.t_min) t0 = *opt.t_min;
  if (opt.t_max) t1 = *opt.t_max;
  if (opt.y_min) y0 = *opt.y_min;
  if (opt.y_max) y1 = *opt.y_max;
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    t0 = std::isfinite(t0) ? t0 : 0.0;
    t1 = t0 + 1.0;
  }
  if (!std::isfinite(y0) || !std::isfinite(y1) || !(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 : 0.0;
    y1 = y0 + 1.0;
  }

  const Frame fr{t0, t1, y0, y1, double(kMarginLeft), double(opt.width - kMarginRight),
                 double(opt.height - kMarginBottom), double(kMarginTop)};

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      opt.width, opt.height);

  // Axes.
  out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     fr.px0, fr.py1, fr.px1 - fr.px0, fr.py0 - fr.py1);
  const double ts = nice_step(t1 - t0);
  for (double t = std::ceil(t0 / ts) * ts; t <= t1 + 1e-9 * ts; t += ts) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" font-size=\"12\" text-anchor=\"middle\">{4:g}</text>\n",
        fr.x(t), fr.py0, fr.py0 + 5, fr.py0 + 18, t);
  }
  const double ys = nice_step(y1 - y0);
  for (double y = std::ceil(y0 / ys) * ys; y <= y1 + 1e-9 * ys; y += ys) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" font-size=\"12\" text-anchor=\"end\">{5:g}</text>\n",
        fr.px0 - 5, fr.y(y), fr.px0, fr.px0 - 8, fr.y(y) + 4, y);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"14\" text-anchor=\"middle\">time (s)</text>\n",
                     0.5 * (fr.px0 + fr.px1), double(opt.height) - 10.0);
  out += fmt::format(
      "<text x=\"16\" y=\"{0:.2f}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2f})\">"
      "position (m)</text>\n",
      0.5 * (fr.py0 + fr.py1));

  std::vector<std::optional<double>> side(set.trajectories.size());
  if (opt.av && opt.color == DiagramColor::kSide) {
    try {
      side = distances_to_av(set, *opt.av);
    } catch (const AnalysisError&) {
    }
  }

  const auto inside = [&](double t, double y) { return t >= t0 && t <= t1 && y >= y0 && y <= y1; };

  const auto draw = [&](std::size_t i, bool is_av) {
    const Trajectory& tr = set.trajectories[i];
    std::string fixed = "#808080";
    if (is_av) {
      fixed = "#ff00ff";
    } else if (opt.color == DiagramColor::kSide && side[i]) {
      fixed = *side[i] >= 0.0 ? "#0000ff" : "#000000";
    }
    const bool by_speed = opt.color == DiagramColor::kSpeed && !is_av;
    Polyline line(out, by_speed ? speed_color(tr.v.empty() ? 0.0 : tr.v[0]) : fixed, is_av ? 3.0 : 1.0);
    long bucket = -1;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (!inside(tr.t[k], tr.y[k])) {
        line.flush();
        bucket = -1;
        continue;
      }
      if (k > 0 && tr.y[k] < tr.y[k - 1] - opt.wrap_jump) {
        line.flush();
        bucket = -1;
      }
      if (by_speed) {
        const long b = std::lround(std::clamp(tr.v[k], 0.0, kMaxSpeed));
        if (b != bucket) {
          const bool continuing = bucket >= 0;
          line.add(fr.x(tr.t[k]), fr.y(tr.y[k]));
          line.flush();
          line.restroke(speed_color(static_cast<double>(b)));
          bucket = b;
          if (!continuing) {
            line.add(fr.x(tr.t[k]), fr.y(tr.y[k]));
            continue;
          }
        }
      }
      line.add(fr.x(tr.t[k]), fr.y(tr.y[k]));
    }
  };

  for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
    if (opt.av && *opt.av == i) continue;
    draw(i, false);
  }
  if (opt.av && *opt.av < set.trajectories.size()) draw(*opt.av, true);

  out += "</svg>\n";
  return out;
}

}  // namespace wavesmooth
