#include "buckle/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "buckle/error.hpp"
#include "buckle/io.hpp"

namespace buckle {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

double real_of(const std::string& key, const std::string& v) {
  try {
    return parse_real(v, key);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

template <typename Int>
Int int_of(const std::string& key, const std::string& v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": cannot parse '" + v + "' as an integer");
  }
  return x;
}

bool bool_of(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> reals_of(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(real_of(key, item));
  return out;
}

std::string join_reals(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_real(xs[i]);
  return out;
}

const char* init_name(InitKind k) {
  switch (k) {
    case InitKind::Square: return "square";
    case InitKind::Disk: return "disk";
    case InitKind::Random: return "random";
    case InitKind::File: return "file";
  }
  return "square";
}

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define REAL_KEY(name, member, help)                                                         \
  Key {                                                                                      \
    name, help, [](RunConfig& c, const std::string& v) { c.member = real_of(name, v); },     \
        [](const RunConfig& c) { return format_real(c.member); }                             \
  }
#define INT_KEY(name, member, help)                                                                     \
  Key {                                                                                                 \
    name, help, [](RunConfig& c, const std::string& v) { c.member = int_of<decltype(c.member)>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                                     \
  }
#define BOOL_KEY(name, member, help)                                                     \
  Key {                                                                                  \
    name, help, [](RunConfig& c, const std::string& v) { c.member = bool_of(name, v); }, \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }      \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      INT_KEY("dim", dim, "spatial dimension, 1 or 2"),
      {"extent", "container box per axis as lo:hi, comma separated (one entry applies to all axes)",
       [](RunConfig& c, const std::string& v) {
         c.extent.clear();
         for (const auto& item : split_list(v)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) throw ConfigError("extent: expected lo:hi, got '" + item + "'");
           c.extent.push_back({real_of("extent", trim(item.substr(0, colon))),
                               real_of("extent", trim(item.substr(colon + 1)))});
         }
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t a = 0; a < c.extent.size(); ++a) {
           out += (a ? "," : "") + format_real(c.extent[a].lo) + ":" + format_real(c.extent[a].hi);
         }
         return out;
       }},
      {"nodes", "nodes per axis including walls, comma separated (one entry applies to all axes)",
       [](RunConfig& c, const std::string& v) {
         c.nodes.clear();
         for (const auto& item : split_list(v)) c.nodes.push_back(int_of<int>("nodes", item));
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t a = 0; a < c.nodes.size(); ++a) out += (a ? "," : "") + std::to_string(c.nodes[a]);
         return out;
       }},
      REAL_KEY("omega0", omega0, "target volume, below the container volume"),
      {"epsilon", "single penalty parameter, or none to use the schedule",
       [](RunConfig& c, const std::string& v) {
         if (v == "none") c.epsilon.reset();
         else c.epsilon = real_of("epsilon", v);
       },
       [](const RunConfig& c) { return c.epsilon ? format_real(*c.epsilon) : std::string("none"); }},
      {"epsilon_schedule", "descending comma list, or default for the geometric schedule",
       [](RunConfig& c, const std::string& v) {
         if (v == "default") c.epsilon_schedule.clear();
         else c.epsilon_schedule = reals_of("epsilon_schedule", v);
       },
       [](const RunConfig& c) {
         return c.epsilon_schedule.empty() ? std::string("default") : join_reals(c.epsilon_schedule);
       }},
      INT_KEY("schedule_points", schedule_points, "points in the default schedule"),
      {"variant", "one_sided or two_sided penalty",
       [](RunConfig& c, const std::string& v) {
         if (v == "one_sided") c.variant = PenaltyVariant::OneSided;
         else if (v == "two_sided") c.variant = PenaltyVariant::TwoSided;
         else throw ConfigError("variant: expected one_sided or two_sided, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.variant == PenaltyVariant::TwoSided ? "two_sided" : "one_sided");
       }},
      {"init", "square, disk, random or file",
       [](RunConfig& c, const std::string& v) {
         if (v == "square") c.init = InitKind::Square;
         else if (v == "disk") c.init = InitKind::Disk;
         else if (v == "random") c.init = InitKind::Random;
         else if (v == "file") c.init = InitKind::File;
         else throw ConfigError("init: expected square, disk, random or file, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(init_name(c.init)); }},
      INT_KEY("init_seed", init_seed, "seed of the random initial field"),
      {"init_file", "field dump used when init = file",
       [](RunConfig& c, const std::string& v) { c.init_file = v; },
       [](const RunConfig& c) { return c.init_file; }},
      INT_KEY("max_iter", optimizer.max_iter, "iteration cap per epsilon"),
      INT_KEY("stall_iterations", optimizer.stall_iterations, "consecutive small changes that stop a run"),
      REAL_KEY("stall_rel", optimizer.stall_rel, "relative change counted as small"),
      INT_KEY("max_backtracks", optimizer.max_backtracks, "step halvings before divergence is declared"),
      REAL_KEY("growth", optimizer.growth, "step growth after an accepted iteration"),
      REAL_KEY("support_rel", optimizer.support_rel, "support threshold relative to max|u|"),
      REAL_KEY("delta_rel", optimizer.delta_rel, "smoothing width relative to max|u|"),
      REAL_KEY("eigen_tol", optimizer.eigen.tol, "relative residual tolerance of the eigensolver"),
      INT_KEY("eigen_max_iter", optimizer.eigen.max_iter, "inverse iteration cap"),
      BOOL_KEY("warm_start", warm_start, "start each epsilon from the previous result"),
      BOOL_KEY("diagnostics", diagnostics, "run the field diagnostics on the last point"),
      BOOL_KEY("compare", compare, "run the two-sided comparison on the last point"),
      {"diag_radii", "ball radii for the density and nondegeneracy estimates",
       [](RunConfig& c, const std::string& v) { c.diag.radii = reals_of("diag_radii", v); },
       [](const RunConfig& c) { return join_reals(c.diag.radii); }},
      REAL_KEY("meanvalue_tol_rel", diag.meanvalue_tol_rel, "mean-value tolerance relative to max|U|"),
      REAL_KEY("first_variation_tol_rel", diag.first_variation_tol_rel, "bump test tolerance factor"),
      INT_KEY("bumps", diag.bumps, "random bumps in the first-variation test"),
      INT_KEY("diag_seed", diag.seed, "seed for bump placement"),
      INT_KEY("checkpoint_every", checkpoint_every, "iterations between checkpoints, 0 for final only"),
      {"output_dir", "artifact directory",
       [](RunConfig& c, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef REAL_KEY
#undef INT_KEY
#undef BOOL_KEY

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
  for (const Key& k : keys()) {
    if (k.get(*this) != k.get(other)) return false;
  }
  return diag.support_rel == other.diag.support_rel;
}

Grid RunConfig::grid() const {
  try {
    return Grid(dim, extent, nodes);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

std::vector<double> RunConfig::schedule() const {
  if (epsilon) return {*epsilon};
  if (!epsilon_schedule.empty()) return epsilon_schedule;
  return default_epsilon_schedule(dim, omega0, schedule_points);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dim != 1 && dim != 2) fail("dim = " + std::to_string(dim) + " is not supported (expected 1 or 2)");
  if (static_cast<int>(extent.size()) != dim) fail("extent: need " + std::to_string(dim) + " intervals");
  if (static_cast<int>(nodes.size()) != dim) fail("nodes: need " + std::to_string(dim) + " counts");
  for (const Interval& iv : extent) {
    if (!(iv.lo < iv.hi)) fail("extent: lo must be below hi");
  }
  const Grid g = grid();
  const double vol = g.container_volume();
  if (!(omega0 > 0.0)) fail("omega0 = " + format_real(omega0) + " must be > 0");
  if (!(omega0 < vol)) {
    fail("omega0 = " + format_real(omega0) + " violates omega0 < |B| = " + format_real(vol) +
         " (container volume)");
  }
  if (epsilon && !(*epsilon > 0.0)) fail("epsilon must be > 0");
  if (epsilon && !epsilon_schedule.empty()) fail("epsilon and epsilon_schedule are mutually exclusive");
  for (std::size_t k = 0; k < epsilon_schedule.size(); ++k) {
    if (!(epsilon_schedule[k] > 0.0)) fail("epsilon_schedule: entries must be > 0");
    if (k > 0 && !(epsilon_schedule[k] < epsilon_schedule[k - 1])) {
      fail("epsilon_schedule: entries must be strictly descending");
    }
  }
  if (schedule_points < 2) fail("schedule_points must be >= 2");
  if (init == InitKind::File && init_file.empty()) fail("init = file needs init_file");
  const auto& o = optimizer;
  if (o.max_iter < 0) fail("max_iter must be >= 0");
  if (o.stall_iterations < 1) fail("stall_iterations must be >= 1");
  if (o.max_backtracks < 1) fail("max_backtracks must be >= 1");
  if (!(o.growth > 1.0)) fail("growth must be > 1");
  if (!(o.stall_rel > 0.0)) fail("stall_rel must be > 0");
  if (!(o.support_rel > 0.0 && o.support_rel < 1.0)) fail("support_rel must lie in (0, 1)");
  if (!(o.delta_rel > 0.0)) fail("delta_rel must be > 0");
  if (!(o.eigen.tol > 0.0)) fail("eigen_tol must be > 0");
  if (o.eigen.max_iter < 1) fail("eigen_max_iter must be >= 1");
  if (diag.radii.empty()) fail("diag_radii must not be empty");
  for (double r : diag.radii) {
    if (!(r > 0.0 && r <= 0.25)) fail("diag_radii: radii must lie in (0, 0.25]");
    if (r < 2.0 * g.h()) fail("diag_radii: radius " + format_real(r) + " is below 2h = " + format_real(2.0 * g.h()));
  }
  if (!(diag.meanvalue_tol_rel > 0.0)) fail("meanvalue_tol_rel must be > 0");
  if (!(diag.first_variation_tol_rel > 0.0)) fail("first_variation_tol_rel must be > 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (output_dir.empty()) fail("output_dir must not be empty");
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, const Key*> index;
  for (const Key& k : keys()) index[k.name] = &k;

  RunConfig c;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (seen[key]++) throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' given twice");
    it->second->set(c, value);
  }
  // Axis lists given once broadcast to every axis; defaults follow dim.
  if (static_cast<int>(c.extent.size()) != c.dim && c.extent.size() <= 1) {
    const Interval iv = c.extent.empty() ? Interval{-2.0, 2.0} : c.extent.front();
    c.extent.assign(static_cast<std::size_t>(std::max(c.dim, 1)), iv);
  }
  if (static_cast<int>(c.nodes.size()) != c.dim && c.nodes.size() <= 1) {
    const int n = c.nodes.empty() ? 129 : c.nodes.front();
    c.nodes.assign(static_cast<std::size_t>(std::max(c.dim, 1)), n);
  }
  if (!seen.count("extent") && c.dim != 2) c.extent.assign(static_cast<std::size_t>(std::max(c.dim, 1)), {-2.0, 2.0});
  if (!seen.count("nodes") && c.dim != 2) c.nodes.assign(static_cast<std::size_t>(std::max(c.dim, 1)), 129);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << is.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(c) + "\n";
  return out;
}

std::string config_reference() {
  const RunConfig defaults;
  std::string out;
  for (const Key& k : keys()) {
    out += std::string(k.name) + " (default " + k.get(defaults) + "): " + k.help + "\n";
  }
  return out;
}

}  // namespace buckle
