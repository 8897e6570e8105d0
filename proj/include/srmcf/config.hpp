#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srmcf/barriers.hpp"
#include "srmcf/common.hpp"
#include "srmcf/field.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/group.hpp"
#include "srmcf/io.hpp"
#include "srmcf/phi.hpp"

namespace srmcf {

struct GroupSettings {
  std::string kind = "se2";  // se2 | heisenberg | carnot | euclidean
  int m = 2;
  int n = 3;
  std::vector<std::vector<double>> W;  // carnot only: n - m matrices, row-major m x m
  std::string theta_policy = "midpoint";
  bool operator==(const GroupSettings&) const = default;
};

struct GridSettings {
  std::vector<int> counts = {32, 32, 16};
  std::vector<double> lower = {-3, -3, 0};
  std::vector<double> upper = {3, 3, kTwoPi};
  std::vector<int> periodic = {0, 0, 1};
  bool operator==(const GridSettings&) const = default;
};

struct FlowSettings {
  double epsilon = 0.1;
  double delta = 0.1;
  double T = 0.05;
  double cfl_safety = 0.25;
  std::string scheme = "monotone";  // monotone | central
  double sl_cells = 3;
  std::optional<double> radius;
  std::optional<double> dt;
  std::vector<double> snapshots;
  int threads = 0;
  std::string initial = "cosine-bump";  // constant | ball | cosine-bump | bar | exp-profile | snapshot
  double initial_value = 0;      // constant level / base
  double initial_amplitude = 1;
  double initial_radius = 1;
  double initial_width = 0.1;    // ball edge width, bar width
  double initial_angle = 0;      // bar direction
  double initial_rate = 2;       // exp-profile
  std::string initial_file;
  bool operator==(const FlowSettings&) const = default;
};

struct SweepSettings {
  std::vector<double> epsilons = {0.2, 0.1, 0.05, 0.025};
  double sigma = 1;
  double confinement_tol = 1e-3;
  std::optional<double> boundary_constant;
  bool operator==(const SweepSettings&) const = default;
};

struct BarrierSettings {
  std::string check = "both";  // cubic | exp | both
  int samples = 10000;
  double r_max = 2.5;
  double t_max = 1;
  double epsilon = 0.1;
  double delta = 0.01;
  double C = cubic_barrier_constant();
  double sigma = 0.01;
  double alpha = 0.5;
  double T = 1;
  double fd_h = 1e-4;
  bool operator==(const BarrierSettings&) const = default;
};

struct PhiSettings {
  double gamma = 4;
  double beta = 0.1;
  double delta = 0.1;
  double epsilon = 0.1;
  double M = 4;
  double alpha = 1.0 / 6.0;
  double T = 1;
  double lip_u0 = 1;
  double sigma = 1;
  int samples = 10000;
  int fd_pairs = 100;
  double fd_h = 1e-5;
  bool operator==(const PhiSettings&) const = default;
};

struct InpaintSettings {
  std::string image = "synthetic-bar";  // PGM path or synthetic-bar
  std::string mask = "synthetic-gap";   // PGM path (nonzero = missing) or synthetic-gap / none / all
  int rows = 48;
  int cols = 48;
  double bar_width = 6;      // pixels
  double gap_width = 8;      // pixels
  int orientations = 16;
  double scale = 1.5;        // filter sigma in pixels
  double extent = 1;         // half-width of the image in group units
  double epsilon = 0.1;
  double delta = 0.1;
  double T = 0.02;
  double cfl_safety = 0.25;
  int snapshot_every = 0;    // 0 = final only
  bool operator==(const InpaintSettings&) const = default;
};

struct Settings {
  GroupSettings group;
  GridSettings grid;
  FlowSettings flow;
  SweepSettings sweep;
  BarrierSettings barriers;
  PhiSettings phi;
  InpaintSettings inpaint;
  std::uint64_t seed = 1;
  bool operator==(const Settings&) const = default;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, key + ": " + msg);
}

inline double parse_double(const std::string& key, const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  errno = 0;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0' || errno == ERANGE || !std::isfinite(v)) config_fail(key, "not a decimal number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  errno = 0;
  const long long v = std::strtoll(b, &e, 10);
  if (e == b || *e != '\0' || errno == ERANGE) config_fail(key, "not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> w;
  for (std::string t; ss >> t;) w.push_back(t);
  return w;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string join(const std::vector<std::string>& v, const char* sep = " ") {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? sep : "") + v[k];
  return s;
}

// One binding per key: a parser and a printer over the settings struct.
struct Binding {
  std::function<void(Settings&, const std::string&, const std::string&)> parse;
  std::function<std::optional<std::string>(const Settings&)> print;
};

template <class T>
Binding real(T Settings::*sec, double T::*f) {
  return {[=](Settings& s, const std::string& k, const std::string& v) { (s.*sec).*f = parse_double(k, v); },
          [=](const Settings& s) -> std::optional<std::string> { return num17((s.*sec).*f); }};
}
template <class T>
Binding opt_real(T Settings::*sec, std::optional<double> T::*f) {
  return {[=](Settings& s, const std::string& k, const std::string& v) {
            if (v == "none") (s.*sec).*f = std::nullopt;
            else (s.*sec).*f = parse_double(k, v);
          },
          [=](const Settings& s) -> std::optional<std::string> {
            const auto& o = (s.*sec).*f;
            if (!o) return std::nullopt;
            return num17(*o);
          }};
}
template <class T>
Binding integer(T Settings::*sec, int T::*f) {
  return {[=](Settings& s, const std::string& k, const std::string& v) {
            const long long x = parse_int(k, v);
            if (x < -2147483647LL || x > 2147483647LL) config_fail(k, "integer out of range");
            (s.*sec).*f = static_cast<int>(x);
          },
          [=](const Settings& s) -> std::optional<std::string> { return std::to_string((s.*sec).*f); }};
}
template <class T>
Binding text(T Settings::*sec, std::string T::*f) {
  return {[=](Settings& s, const std::string&, const std::string& v) { (s.*sec).*f = v; },
          [=](const Settings& s) -> std::optional<std::string> { return (s.*sec).*f; }};
}
template <class T>
Binding reals(T Settings::*sec, std::vector<double> T::*f) {
  return {[=](Settings& s, const std::string& k, const std::string& v) {
            std::vector<double> out;
            for (const auto& w : split_ws(v)) out.push_back(parse_double(k, w));
            (s.*sec).*f = out;
          },
          [=](const Settings& s) -> std::optional<std::string> {
            std::vector<std::string> w;
            for (double x : (s.*sec).*f) w.push_back(num17(x));
            return join(w);
          }};
}
template <class T>
Binding ints(T Settings::*sec, std::vector<int> T::*f) {
  return {[=](Settings& s, const std::string& k, const std::string& v) {
            std::vector<int> out;
            for (const auto& w : split_ws(v)) out.push_back(static_cast<int>(parse_int(k, w)));
            (s.*sec).*f = out;
          },
          [=](const Settings& s) -> std::optional<std::string> {
            std::vector<std::string> w;
            for (int x : (s.*sec).*f) w.push_back(std::to_string(x));
            return join(w);
          }};
}

inline std::vector<double> parse_matrix(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::size_t rows = 0, width = 0;
  std::stringstream ss(v);
  for (std::string row; std::getline(ss, row, ';');) {
    auto w = split_ws(row);
    if (rows == 0) width = w.size();
    if (w.size() != width || width == 0) config_fail(key, "matrix rows must have equal nonzero length");
    for (const auto& x : w) out.push_back(parse_double(key, x));
    ++rows;
  }
  if (rows != width) config_fail(key, "matrix must be square");
  return out;
}

inline std::string print_matrix(const std::vector<double>& a) {
  const auto m = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(a.size()))));
  std::string s;
  for (std::size_t r = 0; r < m; ++r) {
    if (r) s += "; ";
    for (std::size_t c = 0; c < m; ++c) s += (c ? " " : "") + num17(a[r * m + c]);
  }
  return s;
}

/// Section -> ordered keys. Matrices w1..wk are handled separately.
inline const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>>& schema() {
  using S = Settings;
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>> table = {
      {"group",
       {{"kind", text(&S::group, &GroupSettings::kind)},
        {"m", integer(&S::group, &GroupSettings::m)},
        {"n", integer(&S::group, &GroupSettings::n)},
        {"theta_policy", text(&S::group, &GroupSettings::theta_policy)}}},
      {"grid",
       {{"counts", ints(&S::grid, &GridSettings::counts)},
        {"lower", reals(&S::grid, &GridSettings::lower)},
        {"upper", reals(&S::grid, &GridSettings::upper)},
        {"periodic", ints(&S::grid, &GridSettings::periodic)}}},
      {"flow",
       {{"epsilon", real(&S::flow, &FlowSettings::epsilon)},
        {"delta", real(&S::flow, &FlowSettings::delta)},
        {"T", real(&S::flow, &FlowSettings::T)},
        {"cfl_safety", real(&S::flow, &FlowSettings::cfl_safety)},
        {"scheme", text(&S::flow, &FlowSettings::scheme)},
        {"sl_cells", real(&S::flow, &FlowSettings::sl_cells)},
        {"radius", opt_real(&S::flow, &FlowSettings::radius)},
        {"dt", opt_real(&S::flow, &FlowSettings::dt)},
        {"snapshots", reals(&S::flow, &FlowSettings::snapshots)},
        {"threads", integer(&S::flow, &FlowSettings::threads)},
        {"initial", text(&S::flow, &FlowSettings::initial)},
        {"initial_value", real(&S::flow, &FlowSettings::initial_value)},
        {"initial_amplitude", real(&S::flow, &FlowSettings::initial_amplitude)},
        {"initial_radius", real(&S::flow, &FlowSettings::initial_radius)},
        {"initial_width", real(&S::flow, &FlowSettings::initial_width)},
        {"initial_angle", real(&S::flow, &FlowSettings::initial_angle)},
        {"initial_rate", real(&S::flow, &FlowSettings::initial_rate)},
        {"initial_file", text(&S::flow, &FlowSettings::initial_file)}}},
      {"sweep",
       {{"epsilons", reals(&S::sweep, &SweepSettings::epsilons)},
        {"sigma", real(&S::sweep, &SweepSettings::sigma)},
        {"confinement_tol", real(&S::sweep, &SweepSettings::confinement_tol)},
        {"boundary_constant", opt_real(&S::sweep, &SweepSettings::boundary_constant)}}},
      {"barriers",
       {{"check", text(&S::barriers, &BarrierSettings::check)},
        {"samples", integer(&S::barriers, &BarrierSettings::samples)},
        {"r_max", real(&S::barriers, &BarrierSettings::r_max)},
        {"t_max", real(&S::barriers, &BarrierSettings::t_max)},
        {"epsilon", real(&S::barriers, &BarrierSettings::epsilon)},
        {"delta", real(&S::barriers, &BarrierSettings::delta)},
        {"C", real(&S::barriers, &BarrierSettings::C)},
        {"sigma", real(&S::barriers, &BarrierSettings::sigma)},
        {"alpha", real(&S::barriers, &BarrierSettings::alpha)},
        {"T", real(&S::barriers, &BarrierSettings::T)},
        {"fd_h", real(&S::barriers, &BarrierSettings::fd_h)}}},
      {"phi",
       {{"gamma", real(&S::phi, &PhiSettings::gamma)},
        {"beta", real(&S::phi, &PhiSettings::beta)},
        {"delta", real(&S::phi, &PhiSettings::delta)},
        {"epsilon", real(&S::phi, &PhiSettings::epsilon)},
        {"M", real(&S::phi, &PhiSettings::M)},
        {"alpha", real(&S::phi, &PhiSettings::alpha)},
        {"T", real(&S::phi, &PhiSettings::T)},
        {"lip_u0", real(&S::phi, &PhiSettings::lip_u0)},
        {"sigma", real(&S::phi, &PhiSettings::sigma)},
        {"samples", integer(&S::phi, &PhiSettings::samples)},
        {"fd_pairs", integer(&S::phi, &PhiSettings::fd_pairs)},
        {"fd_h", real(&S::phi, &PhiSettings::fd_h)}}},
      {"inpaint",
       {{"image", text(&S::inpaint, &InpaintSettings::image)},
        {"mask", text(&S::inpaint, &InpaintSettings::mask)},
        {"rows", integer(&S::inpaint, &InpaintSettings::rows)},
        {"cols", integer(&S::inpaint, &InpaintSettings::cols)},
        {"bar_width", real(&S::inpaint, &InpaintSettings::bar_width)},
        {"gap_width", real(&S::inpaint, &InpaintSettings::gap_width)},
        {"orientations", integer(&S::inpaint, &InpaintSettings::orientations)},
        {"scale", real(&S::inpaint, &InpaintSettings::scale)},
        {"extent", real(&S::inpaint, &InpaintSettings::extent)},
        {"epsilon", real(&S::inpaint, &InpaintSettings::epsilon)},
        {"delta", real(&S::inpaint, &InpaintSettings::delta)},
        {"T", real(&S::inpaint, &InpaintSettings::T)},
        {"cfl_safety", real(&S::inpaint, &InpaintSettings::cfl_safety)},
        {"snapshot_every", integer(&S::inpaint, &InpaintSettings::snapshot_every)}}},
  };
  return table;
}

inline const Binding* find_binding(const std::string& section, const std::string& key) {
  for (const auto& [sec, keys] : schema())
    if (sec == section)
      for (const auto& [k, b] : keys)
        if (k == key) return &b;
  return nullptr;
}

inline void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) config_fail(key, msg);
}

}  // namespace detail

/// Range checks against the module preconditions. Throws ConfigError naming the key.
inline void check_settings(const Settings& s) {
  using detail::require;
  const auto& g = s.group;
  require(g.kind == "se2" || g.kind == "heisenberg" || g.kind == "carnot" || g.kind == "euclidean", "group.kind",
          "expected se2 | heisenberg | carnot | euclidean");
  require(g.theta_policy == "midpoint" || g.theta_policy == "left", "group.theta_policy", "expected midpoint | left");
  require(g.m >= 1 && g.n >= g.m && g.n <= 16, "group.n", "need 1 <= m <= n <= 16");
  if (g.kind == "carnot") {
    require(g.W.size() == static_cast<std::size_t>(g.n - g.m), "group.w1", "carnot needs n - m matrices w1..wk");
    for (const auto& w : g.W) require(w.size() == static_cast<std::size_t>(g.m * g.m), "group.w1", "matrices must be m x m");
  } else {
    require(g.W.empty(), "group.w1", "matrices are only allowed for kind = carnot");
  }

  const auto& gr = s.grid;
  const std::size_t k = gr.counts.size();
  require(k >= 1, "grid.counts", "at least one axis");
  require(gr.lower.size() == k && gr.upper.size() == k && gr.periodic.size() == k, "grid.lower",
          "counts, lower, upper, periodic must have equal length");
  for (std::size_t a = 0; a < k; ++a) {
    require(gr.counts[a] >= 3, "grid.counts", "each count must be >= 3");
    require(gr.upper[a] > gr.lower[a], "grid.upper", "upper must exceed lower");
    require(gr.periodic[a] == 0 || gr.periodic[a] == 1, "grid.periodic", "flags must be 0 or 1");
  }

  const auto& f = s.flow;
  require(f.epsilon > 0 && f.epsilon < 1, "flow.epsilon", "must lie in (0,1)");
  require(f.delta > 0 && f.delta <= 1, "flow.delta", "must lie in (0,1]");
  require(f.T >= 0, "flow.T", "must be >= 0");
  require(f.cfl_safety > 0 && f.cfl_safety < 1, "flow.cfl_safety", "must lie in (0,1)");
  require(f.scheme == "monotone" || f.scheme == "central", "flow.scheme", "expected monotone | central");
  require(f.sl_cells > 0, "flow.sl_cells", "must be positive");
  require(f.scheme != "monotone" || k <= 8, "flow.scheme", "monotone needs at most 8 grid axes");
  require(!f.radius || *f.radius > 0, "flow.radius", "must be positive");
  require(!f.dt || *f.dt > 0, "flow.dt", "must be positive");
  for (std::size_t q = 0; q < f.snapshots.size(); ++q) {
    require(f.snapshots[q] >= 0 && f.snapshots[q] <= f.T, "flow.snapshots", "times must lie in [0,T]");
    require(q == 0 || f.snapshots[q] >= f.snapshots[q - 1], "flow.snapshots", "times must be sorted");
  }
  require(f.threads >= 0, "flow.threads", "must be >= 0");
  static const std::set<std::string> initials = {"constant", "ball", "cosine-bump", "bar", "exp-profile", "snapshot"};
  require(initials.count(f.initial) == 1, "flow.initial",
          "expected constant | ball | cosine-bump | bar | exp-profile | snapshot");
  require(f.initial_radius > 0, "flow.initial_radius", "must be positive");
  require(f.initial_width > 0, "flow.initial_width", "must be positive");
  require(f.initial_rate > 0, "flow.initial_rate", "must be positive");
  require(f.initial != "snapshot" || !f.initial_file.empty(), "flow.initial_file", "required for initial = snapshot");

  const auto& sw = s.sweep;
  for (double e : sw.epsilons) require(e > 0 && e < 1, "sweep.epsilons", "levels must lie in (0,1)");
  require(sw.sigma >= 0, "sweep.sigma", "must be >= 0");
  require(sw.confinement_tol > 0, "sweep.confinement_tol", "must be positive");

  const auto& b = s.barriers;
  require(b.check == "cubic" || b.check == "exp" || b.check == "both", "barriers.check", "expected cubic | exp | both");
  require(b.samples >= 1, "barriers.samples", "must be >= 1");
  require(b.r_max > 0, "barriers.r_max", "must be positive");
  require(b.t_max >= 0, "barriers.t_max", "must be >= 0");
  require(b.epsilon > 0 && b.epsilon < 1, "barriers.epsilon", "must lie in (0,1)");
  require(b.delta > 0 && b.delta <= 1, "barriers.delta", "must lie in (0,1]");
  require(b.C >= 0, "barriers.C", "must be >= 0");
  require(b.sigma > 0, "barriers.sigma", "must be positive");
  require(b.alpha > 0 && b.alpha <= 1, "barriers.alpha", "must lie in (0,1]");
  require(b.T > 0, "barriers.T", "must be positive");
  require(b.fd_h > 0 && b.fd_h < 0.1, "barriers.fd_h", "must lie in (0,0.1)");

  const auto& p = s.phi;
  require(p.gamma > 2, "phi.gamma", "must exceed 2");
  require(p.beta > 0 && p.beta <= 1, "phi.beta", "must lie in (0,1]");
  require(p.delta > 0 && p.delta <= 1, "phi.delta", "must lie in (0,1]");
  require(p.epsilon > 0 && p.epsilon < 1, "phi.epsilon", "must lie in (0,1)");
  require(p.M > 0, "phi.M", "must be positive");
  require(p.alpha > 0, "phi.alpha", "must be positive");
  require(p.T > 0, "phi.T", "must be positive");
  require(p.lip_u0 >= 0, "phi.lip_u0", "must be >= 0");
  require(p.sigma > 0, "phi.sigma", "must be positive");
  require(p.samples >= 100, "phi.samples", "must be >= 100");
  require(p.fd_pairs >= 1, "phi.fd_pairs", "must be >= 1");
  require(p.fd_h > 0 && p.fd_h < 0.1, "phi.fd_h", "must lie in (0,0.1)");

  const auto& ip = s.inpaint;
  require(ip.rows >= 8 && ip.cols >= 8, "inpaint.rows", "image must be at least 8 x 8");
  require(ip.bar_width > 0, "inpaint.bar_width", "must be positive");
  require(ip.gap_width >= 0, "inpaint.gap_width", "must be >= 0");
  require(ip.orientations >= 8, "inpaint.orientations", "need K >= 8");
  require(ip.scale > 0, "inpaint.scale", "must be positive");
  require(ip.extent > 0, "inpaint.extent", "must be positive");
  require(ip.epsilon > 0 && ip.epsilon < 1, "inpaint.epsilon", "must lie in (0,1)");
  require(ip.delta > 0 && ip.delta <= 1, "inpaint.delta", "must lie in (0,1]");
  require(ip.T >= 0, "inpaint.T", "must be >= 0");
  require(ip.cfl_safety > 0 && ip.cfl_safety < 1, "inpaint.cfl_safety", "must lie in (0,1)");
  require(ip.snapshot_every >= 0, "inpaint.snapshot_every", "must be >= 0");
}

/// Parses the flat [section] key = value format. Unknown sections and keys are rejected.
[[nodiscard]] inline Settings parse_settings(std::istream& is) {
  Settings s;
  std::string section;
  std::set<std::string> seen;
  bool group_shape_given = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') detail::config_fail(where, "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [sec, keys] : detail::schema()) known = known || sec == section;
      if (!known) detail::config_fail(where, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_fail(where, "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    if (section.empty()) {
      if (key != "seed") detail::config_fail(key, "key outside any section");
      const long long v = detail::parse_int(key, val);
      if (v < 0) detail::config_fail(key, "must be >= 0");
      s.seed = static_cast<std::uint64_t>(v);
      continue;
    }
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) detail::config_fail(full, "duplicate key");
    if (section == "group" && key.size() >= 2 && key[0] == 'w' &&
        key.find_first_not_of("0123456789", 1) == std::string::npos) {
      const auto idx = static_cast<std::size_t>(detail::parse_int(full, key.substr(1)));
      if (idx < 1 || idx > 64) detail::config_fail(full, "matrix index out of range");
      if (s.group.W.size() < idx) s.group.W.resize(idx);
      s.group.W[idx - 1] = detail::parse_matrix(full, val);
      continue;
    }
    const detail::Binding* b = detail::find_binding(section, key);
    if (!b) detail::config_fail(full, "unknown key");
    b->parse(s, full, val);
    if (full == "group.m" || full == "group.n") group_shape_given = true;
  }
  for (std::size_t k = 0; k < s.group.W.size(); ++k)
    if (s.group.W[k].empty()) detail::config_fail("group.w" + std::to_string(k + 1), "missing matrix");
  // named groups fix their own shape
  if (s.group.kind == "se2" || s.group.kind == "heisenberg") {
    if (group_shape_given && (s.group.m != 2 || s.group.n != 3))
      detail::config_fail("group.n", s.group.kind + " has m = 2, n = 3");
    s.group.m = 2;
    s.group.n = 3;
  } else if (s.group.kind == "euclidean" && seen.count("group.n") == 0) {
    s.group.n = s.group.m;
  }
  if (s.group.kind == "euclidean" && s.group.n != s.group.m) detail::config_fail("group.n", "euclidean needs n = m");
  check_settings(s);
  return s;
}

[[nodiscard]] inline Settings parse_settings(const std::string& text) {
  std::istringstream is(text);
  return parse_settings(is);
}

[[nodiscard]] inline Settings load_settings(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  return parse_settings(is);
}

inline void serialize_settings(std::ostream& os, const Settings& s) {
  os << "seed = " << s.seed << "\n";
  for (const auto& [sec, keys] : detail::schema()) {
    os << "\n[" << sec << "]\n";
    for (const auto& [k, b] : keys)
      if (auto v = b.print(s)) os << k << " = " << *v << "\n";
    if (sec == "group")
      for (std::size_t q = 0; q < s.group.W.size(); ++q)
        os << "w" << q + 1 << " = " << detail::print_matrix(s.group.W[q]) << "\n";
  }
}

[[nodiscard]] inline std::string serialize_settings(const Settings& s) {
  std::ostringstream os;
  serialize_settings(os, s);
  return os.str();
}

// ---- settings -> library objects ------------------------------------------------------

[[nodiscard]] inline GroupSpec to_group_spec(const GroupSettings& g) {
  const ThetaPolicy pol = g.theta_policy == "left" ? ThetaPolicy::Left : ThetaPolicy::Midpoint;
  if (g.kind == "se2") return GroupSpec::se2(pol);
  if (g.kind == "heisenberg") return GroupSpec::heisenberg();
  if (g.kind == "euclidean") return GroupSpec::euclidean(g.m);
  GroupSpec s;
  s.m = g.m;
  s.n = g.n;
  for (const auto& w : g.W) {
    Eigen::MatrixXd M(g.m, g.m);
    for (int r = 0; r < g.m; ++r)
      for (int c = 0; c < g.m; ++c) M(r, c) = w[static_cast<std::size_t>(r * g.m + c)];
    s.W.push_back(M);
  }
  return s;
}

[[nodiscard]] inline GridSpec to_grid(const GridSettings& g) {
  std::vector<bool> per;
  for (int p : g.periodic) per.push_back(p != 0);
  return GridSpec::box(g.counts, g.lower, g.upper, per);
}

/// Initial datum from the named primitives. rho is the group pseudo-norm.
[[nodiscard]] inline ScalarField initial_field(const FlowSettings& f, const Group& g, const GridSpec& grid) {
  if (f.initial == "snapshot") {
    ScalarField u = read_snapshot(f.initial_file);
    if (!(u.grid == grid)) throw Error(ErrorCode::ConfigError, "flow.initial_file: snapshot grid differs from [grid]");
    u.time = 0;
    return u;
  }
  const double v0 = f.initial_value, A = f.initial_amplitude, r0 = f.initial_radius, w = f.initial_width;
  const std::string& kind = f.initial;
  return sample(grid, [&](std::span<const double> p) {
    const double rho = g.pseudo_norm(p);
    if (kind == "constant") return v0;
    if (kind == "ball") return v0 + A * 0.5 * (1 + std::tanh((r0 - rho) / w));
    if (kind == "cosine-bump") return rho < r0 ? v0 + A * 0.5 * (1 + std::cos(kPi * rho / r0)) : v0;
    if (kind == "bar") {
      const double y = -std::sin(f.initial_angle) * p[0] + std::cos(f.initial_angle) * (p.size() > 1 ? p[1] : 0.0);
      return v0 + A * 0.5 * (1 + std::tanh((0.5 * r0 - std::abs(y)) / w));
    }
    return v0 + 1 - A * std::exp(-f.initial_rate * rho);  // exp-profile
  });
}

[[nodiscard]] inline FlowProblem to_flow_problem(const Settings& s) {
  FlowProblem p;
  p.group = to_group_spec(s.group);
  const Group g = Group::validate(p.group);
  const GridSpec grid = to_grid(s.grid);
  grid.validate_for(g);
  p.u0 = initial_field(s.flow, g, grid);
  p.epsilon = s.flow.epsilon;
  p.delta = s.flow.delta;
  p.R = s.flow.radius;
  p.T = s.flow.T;
  p.cfl_safety = s.flow.cfl_safety;
  p.scheme = s.flow.scheme == "central" ? Scheme::Central : Scheme::Monotone;
  p.sl_cells = s.flow.sl_cells;
  p.snapshot_times = s.flow.snapshots;
  p.dt = s.flow.dt;
  return p;
}

[[nodiscard]] inline PhiParams to_phi_params(const PhiSettings& s) {
  PhiParams p;
  p.gamma = s.gamma;
  p.beta = s.beta;
  p.delta = s.delta;
  p.epsilon = s.epsilon;
  p.M = s.M;
  p.alpha = s.alpha;
  p.T = s.T;
  p.lip_u0 = s.lip_u0;
  p.sigma = s.sigma;
  return p;
}

}  // namespace srmcf
