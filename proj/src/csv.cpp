#include "wavesmooth/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace wavesmooth {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* column) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ParseError(line, fmt::format("column '{}': cannot parse '{}'", column, text));
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, fmt::format("column '{}': non-finite value", column));
  }
  return value;
}

std::string distance_label(double d) { return fmt::format("{:g}m", d); }

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.4f}", x);
}

}  // namespace

ParseError::ParseError(std::size_t line_no, const std::string& message)
    : std::runtime_error(line_no > 0 ? fmt::format("line {}: {}", line_no, message) : message), line(line_no) {}

TrajectorySet parse_trajectory_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const std::vector<std::string> header = split(trim(line), ',');
  constexpr std::array<const char*, 5> kColumns{"vehicle_id", "lane", "t", "y", "v"};
  std::array<std::size_t, 5> col{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == kColumns[c]; });
    if (it == header.end()) throw ParseError(1, fmt::format("missing column '{}'", kColumns[c]));
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;

  TrajectorySet set;
  std::set<std::string> finished;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() < needed) throw ParseError(line_no, fmt::format("expected {} fields, found {}", header.size(), f.size()));
    const std::string id = trim(f[col[0]]);
    if (id.empty()) throw ParseError(line_no, "column 'vehicle_id': empty");
    const int lane = parse_number<int>(trim(f[col[1]]), line_no, "lane");
    const double t = parse_number<double>(trim(f[col[2]]), line_no, "t");
    const double y = parse_number<double>(trim(f[col[3]]), line_no, "y");
    const double v = parse_number<double>(trim(f[col[4]]), line_no, "v");

    if (set.trajectories.empty() || set.trajectories.back().id != id) {
      if (finished.count(id) != 0) {
        throw ParseError(line_no, fmt::format("rows of vehicle '{}' are not contiguous", id));
      }
      if (!set.trajectories.empty()) finished.insert(set.trajectories.back().id);
      set.trajectories.push_back(Trajectory{id, lane, VehicleKind::kUnknown, {}, {}, {}});
    }
    Trajectory& tr = set.trajectories.back();
    if (!tr.t.empty() && !(t > tr.t.back())) {
      throw ParseError(line_no, fmt::format("time is not increasing for vehicle '{}'", id));
    }
    tr.t.push_back(t);
    tr.y.push_back(y);
    tr.v.push_back(v);
  }
  if (set.trajectories.empty()) throw ParseError(line_no, "no data rows");

  for (const Trajectory& tr : set.trajectories) {
    if (tr.size() >= 2) {
      set.dt = std::round((tr.t[1] - tr.t[0]) * 1000.0) / 1000.0;
      break;
    }
  }
  return set;
}

void write_trajectory_csv(std::ostream& out, const TrajectorySet& set) {
  std::vector<std::size_t> order(set.trajectories.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.trajectories[a].id < set.trajectories[b].id;
  });
  out << "vehicle_id,lane,t,y,v\n";
  for (std::size_t i : order) {
    const Trajectory& tr = set.trajectories[i];
    for (std::size_t k = 0; k < tr.size(); ++k) {
      out << fmt::format("{},{},{:.3f},{:.3f},{:.3f}\n", tr.id, tr.lane, tr.t[k], tr.y[k], tr.v[k]);
    }
  }
}

TrajectorySet read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, fmt::format("cannot open '{}'", path));
  return parse_trajectory_csv(in);
}

void write_controller_log_csv(std::ostream& out, const std::vector<ControllerLogRow>& rows) {
  out << "t,h,v,v_lead,a_safe,a_target,a_mpc,a_cmd,mode,signal_valid\n";
  for (const ControllerLogRow& r : rows) {
    out << fmt::format("{:.3f},{},{},{},{},{},{},{},{},{}\n", r.t, number(r.h), number(r.v), number(r.v_lead),
                       number(r.a_safe), number(r.a_target), number(r.a_mpc), number(r.a_cmd), r.mode,
                       r.signal_valid ? 1 : 0);
  }
}

void write_variance_grid_csv(std::ostream& out, const VarianceGrid& grid) {
  out << "behind\\front";
  for (double f : grid.front) out << ',' << distance_label(f);
  out << '\n';
  for (std::size_t r = 0; r < grid.behind.size(); ++r) {
    out << distance_label(grid.behind[r]);
    for (std::size_t c = 0; c < grid.front.size(); ++c) {
      const double pct = grid.percent(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      out << ',' << format_percent(std::isnan(pct) ? std::nullopt : std::optional<double>(pct));
    }
    out << '\n';
  }
}

void write_variance_grid_text(std::ostream& out, const VarianceGrid& grid) {
  constexpr int kWidth = 8;
  out << fmt::format("{:<14}", "behind\\front");
  for (double f : grid.front) out << fmt::format("{:>{}}", distance_label(f), kWidth);
  out << '\n';
  for (std::size_t r = 0; r < grid.behind.size(); ++r) {
    out << fmt::format("{:<14}", distance_label(grid.behind[r]));
    for (std::size_t c = 0; c < grid.front.size(); ++c) {
      const double pct = grid.percent(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      out << fmt::format("{:>{}}", format_percent(std::isnan(pct) ? std::nullopt : std::optional<double>(pct)), kWidth);
    }
    out << '\n';
  }
}

}  // namespace wavesmooth
