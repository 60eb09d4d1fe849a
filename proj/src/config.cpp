#include "wavesmooth/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "wavesmooth/csv.hpp"

namespace wavesmooth {

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

using Section = std::vector<Entry>;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double to_double(const std::string& text, const Entry& e) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError(e.line, fmt::format("'{}': expected a number, got '{}'", e.key, text));
  }
  return value;
}

double to_double(const Entry& e) {
  if (e.value == "inf") return std::numeric_limits<double>::infinity();
  return to_double(e.value, e);
}

std::uint64_t to_uint(const Entry& e) {
  std::uint64_t value = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, value);
  if (e.value.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(e.line, fmt::format("'{}': expected a non-negative integer, got '{}'", e.key, e.value));
  }
  return value;
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ParseError(e.line, fmt::format("'{}': expected true or false, got '{}'", e.key, e.value));
}

std::vector<double> to_tuple(const Entry& e, std::size_t n) {
  const std::vector<std::string> w = words(e.value);
  if (w.size() != n) throw ParseError(e.line, fmt::format("'{}': expected {} numbers, got '{}'", e.key, n, e.value));
  std::vector<double> out;
  for (const std::string& s : w) out.push_back(to_double(s, e));
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> kSchema{
      {"scenario",
       {"topology", "length", "vehicles", "av_index", "perturbed_index", "perturbation", "humans_ahead",
        "humans_behind", "with_av", "leader_knot", "duration", "cut_in"}},
      {"sensor", {"range_max", "dropout", "loss_probability"}},
      {"sim", {"dt", "integrator", "seed"}},
      {"controller",
       {"a_min", "a_l_min", "s0", "k", "c1", "c2", "delta1", "tau", "alpha0", "alpha1", "v_ref", "a_max", "k2",
        "h_correction", "eps_v", "eps_a", "eps_h", "lead_accel_time_constant", "plan_max_age", "engage_min_speed",
        "engagement_gate", "planning_clip", "barrier_lead_accel"}},
      {"human", {"preset", "a_ftl", "b_ov", "v_max", "d0", "l_veh"}},
      {"grid", {"box_width", "t_bin", "extent_front", "extent_behind", "speed_threshold", "smoothing_window"}},
      {"plan", {"axis", "issued_at", "bin"}},
  };
  return kSchema;
}

const std::set<std::string>& repeatable() {
  static const std::set<std::string> kRepeatable{"cut_in", "dropout", "bin", "leader_knot"};
  return kRepeatable;
}

std::map<std::string, Section> read_sections(std::istream& in) {
  std::map<std::string, Section> sections;
  std::string current;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (schema().count(current) == 0) throw ParseError(line_no, fmt::format("unknown section '{}'", current));
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    if (current.empty()) throw ParseError(line_no, "key outside of a section");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (schema().at(current).count(e.key) == 0) {
      throw ParseError(line_no, fmt::format("unknown key '{}' in section [{}]", e.key, current));
    }
    if (repeatable().count(e.key) == 0) {
      for (const Entry& prev : sections[current]) {
        if (prev.key == e.key) throw ParseError(line_no, fmt::format("duplicate key '{}'", e.key));
      }
    }
    sections[current].push_back(std::move(e));
  }
  return sections;
}

const Entry* find(const std::map<std::string, Section>& s, const std::string& section, const std::string& key) {
  const auto it = s.find(section);
  if (it == s.end()) return nullptr;
  for (const Entry& e : it->second) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::vector<const Entry*> find_all(const std::map<std::string, Section>& s, const std::string& section,
                                   const std::string& key) {
  std::vector<const Entry*> out;
  const auto it = s.find(section);
  if (it == s.end()) return out;
  for (const Entry& e : it->second) {
    if (e.key == key) out.push_back(&e);
  }
  return out;
}

template <typename Fn>
void rethrow_invalid(Fn&& fn, std::size_t line = 0) {
  try {
    fn();
  } catch (const std::invalid_argument& ex) {
    throw ParseError(line, ex.what());
  }
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  const std::map<std::string, Section> s = read_sections(in);
  RunConfig cfg;

  auto number = [&](const char* section, const char* key, double fallback) {
    const Entry* e = find(s, section, key);
    return e != nullptr ? to_double(*e) : fallback;
  };
  auto count = [&](const char* section, const char* key, std::size_t fallback) {
    const Entry* e = find(s, section, key);
    return e != nullptr ? static_cast<std::size_t>(to_uint(*e)) : fallback;
  };

  Topology topology = Topology::kRing;
  if (const Entry* e = find(s, "scenario", "topology")) {
    if (e->value == "ring") {
      topology = Topology::kRing;
    } else if (e->value == "open") {
      topology = Topology::kOpen;
    } else {
      throw ParseError(e->line, fmt::format("'topology': expected ring or open, got '{}'", e->value));
    }
  }

  // Human drivers: preset first, then individual overrides.
  cfg.human = topology == Topology::kRing ? unstable_ring_preset() : open_road_preset();
  if (const Entry* e = find(s, "human", "preset")) {
    if (e->value == "unstable-ring") {
      cfg.human = unstable_ring_preset();
    } else if (e->value == "open-road") {
      cfg.human = open_road_preset();
    } else if (e->value == "default") {
      cfg.human = HumanDriverParams{};
    } else {
      throw ParseError(e->line, fmt::format("'preset': unknown preset '{}'", e->value));
    }
  }
  cfg.human.a_ftl = number("human", "a_ftl", cfg.human.a_ftl);
  cfg.human.b_ov = number("human", "b_ov", cfg.human.b_ov);
  cfg.human.v_max = number("human", "v_max", cfg.human.v_max);
  cfg.human.d0 = number("human", "d0", cfg.human.d0);
  cfg.human.l_veh = number("human", "l_veh", cfg.human.l_veh);
  rethrow_invalid([&] { validate(cfg.human); });

  if (topology == Topology::kRing) {
    for (const char* key : {"humans_ahead", "humans_behind", "with_av", "leader_knot"}) {
      if (const Entry* e = find(s, "scenario", key)) {
        throw ParseError(e->line, fmt::format("'{}' applies to the open topology only", key));
      }
    }
    RingSetup ring;
    ring.human = cfg.human;
    ring.vehicles = count("scenario", "vehicles", ring.vehicles);
    ring.length = number("scenario", "length", ring.length);
    ring.perturbed_index = count("scenario", "perturbed_index", ring.perturbed_index);
    ring.perturbation = number("scenario", "perturbation", ring.perturbation);
    ring.duration = number("scenario", "duration", ring.duration);
    if (const Entry* e = find(s, "scenario", "av_index")) {
      if (e->value != "none") ring.av_index = static_cast<std::size_t>(to_uint(*e));
    }
    rethrow_invalid([&] { cfg.scenario = make_ring_scenario(ring); });
  } else {
    for (const char* key : {"length", "vehicles", "av_index", "perturbed_index", "perturbation"}) {
      if (const Entry* e = find(s, "scenario", key)) {
        throw ParseError(e->line, fmt::format("'{}' applies to the ring topology only", key));
      }
    }
    OpenRoadSetup open;
    open.human = cfg.human;
    open.humans_ahead = count("scenario", "humans_ahead", open.humans_ahead);
    open.humans_behind = count("scenario", "humans_behind", open.humans_behind);
    if (const Entry* e = find(s, "scenario", "with_av")) open.with_av = to_bool(*e);
    open.duration = number("scenario", "duration", open.duration);
    const std::vector<const Entry*> knots = find_all(s, "scenario", "leader_knot");
    if (!knots.empty()) {
      std::vector<SpeedScript::Knot> k;
      for (const Entry* e : knots) {
        const std::vector<double> tv = to_tuple(*e, 2);
        k.push_back({tv[0], tv[1]});
      }
      rethrow_invalid([&] { open.leader_profile = SpeedScript(std::move(k)); }, knots.front()->line);
    }
    rethrow_invalid([&] { cfg.scenario = make_open_road_scenario(open); });
  }

  cfg.scenario.cut_in_params = cfg.human;
  for (const Entry* e : find_all(s, "scenario", "cut_in")) {
    const std::vector<double> v = to_tuple(*e, 3);
    cfg.scenario.cut_ins.push_back(CutInEvent{v[0], v[1], v[2]});
  }

  cfg.scenario.sensor.range_max = number("sensor", "range_max", cfg.scenario.sensor.range_max);
  cfg.scenario.sensor.loss_probability = number("sensor", "loss_probability", 0.0);
  if (const Entry* e = find(s, "sensor", "loss_probability")) {
    const double p = cfg.scenario.sensor.loss_probability;
    if (p < 0.0 || p > 1.0) throw ParseError(e->line, "'loss_probability' must lie in [0, 1]");
  }
  for (const Entry* e : find_all(s, "sensor", "dropout")) {
    const std::vector<double> v = to_tuple(*e, 2);
    if (!(v[1] > v[0])) throw ParseError(e->line, "'dropout': end must follow begin");
    cfg.scenario.sensor.dropouts.push_back(DropoutInterval{v[0], v[1]});
  }
  rethrow_invalid([&] { cfg.scenario.validate(); });

  cfg.sim.dt = number("sim", "dt", cfg.sim.dt);
  if (const Entry* e = find(s, "sim", "dt"); e != nullptr && !(cfg.sim.dt > 0.0)) {
    throw ParseError(e->line, "'dt' must be positive");
  }
  if (const Entry* e = find(s, "sim", "integrator")) {
    if (e->value == "euler") {
      cfg.sim.integrator = Integrator::kEuler;
    } else if (e->value == "rk4") {
      cfg.sim.integrator = Integrator::kRk4;
    } else {
      throw ParseError(e->line, fmt::format("'integrator': expected euler or rk4, got '{}'", e->value));
    }
  }
  if (const Entry* e = find(s, "sim", "seed")) cfg.sim.seed = to_uint(*e);

  ControllerParams& c = cfg.controller;
  const std::vector<std::pair<const char*, double*>> scalars{
      {"a_min", &c.a_min},
      {"a_l_min", &c.a_l_min},
      {"s0", &c.s0},
      {"k", &c.k},
      {"c1", &c.c1},
      {"c2", &c.c2},
      {"delta1", &c.delta1},
      {"tau", &c.tau},
      {"alpha0", &c.alpha0},
      {"alpha1", &c.alpha1},
      {"v_ref", &c.v_ref},
      {"a_max", &c.a_max},
      {"k2", &c.k2},
      {"h_correction", &c.h_correction},
      {"eps_v", &c.eps_v},
      {"eps_a", &c.eps_a},
      {"eps_h", &c.eps_h},
      {"lead_accel_time_constant", &c.lead_accel_time_constant},
      {"plan_max_age", &c.plan_max_age},
      {"engage_min_speed", &c.engage_min_speed},
  };
  for (const auto& [key, field] : scalars) *field = number("controller", key, *field);
  if (const Entry* e = find(s, "controller", "engagement_gate")) c.engagement_gate = to_bool(*e);
  if (const Entry* e = find(s, "controller", "planning_clip")) {
    if (e->value == "literal") {
      c.planning_clip = PlanningClip::kLiteral;
    } else if (e->value == "clamp") {
      c.planning_clip = PlanningClip::kClamp;
    } else {
      throw ParseError(e->line, fmt::format("'planning_clip': expected literal or clamp, got '{}'", e->value));
    }
  }
  if (const Entry* e = find(s, "controller", "barrier_lead_accel")) {
    if (e->value == "worst-case") {
      c.barrier_lead_accel = BarrierLeadAccel::kWorstCase;
    } else if (e->value == "estimated") {
      c.barrier_lead_accel = BarrierLeadAccel::kEstimated;
    } else {
      throw ParseError(e->line,
                       fmt::format("'barrier_lead_accel': expected worst-case or estimated, got '{}'", e->value));
    }
  }
  rethrow_invalid([&] { validate(c); });

  GridParams& g = cfg.grid;
  g.box_width = number("grid", "box_width", g.box_width);
  g.t_bin = number("grid", "t_bin", g.t_bin);
  g.extent_front = number("grid", "extent_front", g.extent_front);
  g.extent_behind = number("grid", "extent_behind", g.extent_behind);
  g.speed_threshold = number("grid", "speed_threshold", g.speed_threshold);
  g.smoothing_window = count("grid", "smoothing_window", g.smoothing_window);
  if (!(g.box_width > 0.0) || !(g.t_bin > 0.0) || g.extent_front < 0.0 || g.extent_behind < 0.0 ||
      g.smoothing_window == 0) {
    throw ParseError(0, "[grid]: widths must be positive, extents non-negative, smoothing_window >= 1");
  }

  if (s.count("plan") != 0) {
    PlanProfile plan;
    if (const Entry* e = find(s, "plan", "axis")) {
      if (e->value == "position") {
        plan.axis = PlanProfile::Axis::kPosition;
      } else if (e->value == "time") {
        plan.axis = PlanProfile::Axis::kTime;
      } else {
        throw ParseError(e->line, fmt::format("'axis': expected position or time, got '{}'", e->value));
      }
    }
    plan.issued_at = number("plan", "issued_at", 0.0);
    for (const Entry* e : find_all(s, "plan", "bin")) {
      const std::vector<double> v = to_tuple(*e, 3);
      plan.bins.push_back(PlanProfile::Bin{v[0], v[1], v[2]});
    }
    rethrow_invalid([&] { plan.validate(); });
    cfg.plan = std::move(plan);
  }
  return cfg;
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, fmt::format("cannot open '{}'", path));
  return parse_config(in);
}

}  // namespace wavesmooth
