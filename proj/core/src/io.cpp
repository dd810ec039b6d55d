#include "buckle/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "buckle/error.hpp"

namespace buckle {

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& s, const std::string& what) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    throw FormatError(what + ": cannot parse '" + s + "' as a real number");
  }
  return x;
}

namespace {

long parse_int(const std::string& s, const std::string& what) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(what + ": cannot parse '" + s + "' as an integer");
  }
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string grid_header(const Grid& g) {
  std::string out = "dim=" + std::to_string(g.dim()) + " nodes=";
  for (int a = 0; a < g.dim(); ++a) {
    if (a) out += ',';
    out += std::to_string(g.nodes(a));
  }
  out += " extent=";
  for (int a = 0; a < g.dim(); ++a) {
    if (a) out += ',';
    out += format_real(g.extent()[a].lo) + ":" + format_real(g.extent()[a].hi);
  }
  return out;
}

// Parses "<magic> v1 dim=.. nodes=.. extent=.." into a grid.
Grid parse_grid_header(const std::string& line, const std::string& magic, std::optional<int> expected_dim) {
  std::istringstream in(line);
  std::string tag, version, dim_s, nodes_s, extent_s, extra;
  in >> tag >> version >> dim_s >> nodes_s >> extent_s;
  if (tag != magic) throw FormatError("expected header '" + magic + "', found '" + tag + "'");
  if (version != "v1") throw FormatError(magic + ": unsupported version '" + version + "'");
  if (dim_s.rfind("dim=", 0) != 0 || nodes_s.rfind("nodes=", 0) != 0 || extent_s.rfind("extent=", 0) != 0 ||
      (in >> extra)) {
    throw FormatError(magic + ": malformed header '" + line + "'");
  }
  const int dim = static_cast<int>(parse_int(dim_s.substr(4), magic + " dim"));
  if (expected_dim && *expected_dim != dim) {
    throw FormatError(magic + ": dimension mismatch, expected " + std::to_string(*expected_dim) + ", got " +
                      std::to_string(dim));
  }
  const auto node_parts = split(nodes_s.substr(6), ',');
  const auto extent_parts = split(extent_s.substr(7), ',');
  if (static_cast<int>(node_parts.size()) != dim || static_cast<int>(extent_parts.size()) != dim) {
    throw FormatError(magic + ": header lists " + std::to_string(node_parts.size()) + " node counts and " +
                      std::to_string(extent_parts.size()) + " extents for dim=" + std::to_string(dim));
  }
  std::vector<int> nodes;
  std::vector<Interval> extent;
  for (int a = 0; a < dim; ++a) {
    nodes.push_back(static_cast<int>(parse_int(node_parts[a], magic + " nodes")));
    const auto lh = split(extent_parts[a], ':');
    if (lh.size() != 2) throw FormatError(magic + ": malformed extent '" + extent_parts[a] + "'");
    extent.push_back({parse_real(lh[0], magic + " extent"), parse_real(lh[1], magic + " extent")});
  }
  try {
    return Grid(dim, extent, nodes);
  } catch (const ContractError& e) {
    throw FormatError(magic + ": invalid grid: " + e.what());
  }
}

std::string next_line(std::istream& is, const std::string& what) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(what + ": unexpected end of input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_field(std::ostream& os, const ScalarField& v) {
  os << "BUCKLE-FIELD v1 " << grid_header(v.grid()) << '\n';
  for (double x : v.values()) os << format_real(x) << '\n';
}

ScalarField read_field(std::istream& is, std::optional<int> expected_dim) {
  const Grid g = parse_grid_header(next_line(is, "BUCKLE-FIELD"), "BUCKLE-FIELD", expected_dim);
  std::vector<double> values(g.node_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = parse_real(next_line(is, "BUCKLE-FIELD body"), "BUCKLE-FIELD value " + std::to_string(i));
  }
  try {
    return ScalarField(g, std::move(values));
  } catch (const ContractError& e) {
    throw FormatError(std::string("BUCKLE-FIELD: ") + e.what());
  }
}

void write_mask(std::ostream& os, const DomainMask& mask) {
  const Grid& g = mask.grid();
  os << "BUCKLE-MASK v1 " << grid_header(g) << '\n';
  const std::size_t row = static_cast<std::size_t>(g.cells(0));
  std::string line;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    line += mask.active(c) ? '1' : '0';
    if (line.size() == row) {
      os << line << '\n';
      line.clear();
    }
  }
}

DomainMask read_mask(std::istream& is) {
  const Grid g = parse_grid_header(next_line(is, "BUCKLE-MASK"), "BUCKLE-MASK", std::nullopt);
  const std::size_t row = static_cast<std::size_t>(g.cells(0));
  std::vector<std::uint8_t> cells;
  cells.reserve(g.cell_count());
  while (cells.size() < g.cell_count()) {
    const std::string line = next_line(is, "BUCKLE-MASK body");
    if (line.size() != row) {
      throw FormatError("BUCKLE-MASK: row of length " + std::to_string(line.size()) + ", expected " +
                        std::to_string(row));
    }
    for (char ch : line) {
      if (ch != '0' && ch != '1') throw FormatError("BUCKLE-MASK: cell entries must be 0 or 1");
      cells.push_back(ch == '1' ? 1 : 0);
    }
  }
  return DomainMask(g, std::move(cells));
}

void write_checkpoint(std::ostream& os, const OptimizerState& s, const std::string& config_text) {
  os << "BUCKLE-CKPT v1\nconfig-begin\n" << config_text;
  if (!config_text.empty() && config_text.back() != '\n') os << '\n';
  os << "config-end\n";
  os << "state epsilon=" << format_real(s.cfg.epsilon) << " omega0=" << format_real(s.cfg.omega0)
     << " delta=" << format_real(s.cfg.delta)
     << " variant=" << (s.cfg.variant == PenaltyVariant::TwoSided ? "two_sided" : "one_sided")
     << " step=" << format_real(s.step) << " iter=" << s.iter << " stall=" << s.stall
     << " total=" << format_real(s.total) << " converged=" << (s.converged ? 1 : 0) << " rng_seed=" << s.rng_seed
     << '\n';
  os << "schedule " << s.epsilon_schedule.size();
  for (double e : s.epsilon_schedule) os << ' ' << format_real(e);
  os << "\nhistory " << s.history.size() << '\n';
  for (const auto& h : s.history) {
    os << h.iter << ' ' << format_real(h.total) << ' ' << format_real(h.rayleigh) << ' '
       << format_real(h.exact_measure) << ' ' << format_real(h.penalty) << '\n';
  }
  write_field(os, s.u);
}

Checkpoint read_checkpoint(std::istream& is) {
  if (next_line(is, "BUCKLE-CKPT") != "BUCKLE-CKPT v1") throw FormatError("expected header 'BUCKLE-CKPT v1'");
  if (next_line(is, "BUCKLE-CKPT") != "config-begin") throw FormatError("BUCKLE-CKPT: missing config-begin");
  Checkpoint ck{"", OptimizerState{ScalarField(make_grid(1, {{0.0, 1.0}}, 5)), {}}};
  for (;;) {
    const std::string line = next_line(is, "BUCKLE-CKPT config");
    if (line == "config-end") break;
    ck.config_text += line + '\n';
  }

  OptimizerState& s = ck.state;
  {
    std::istringstream in(next_line(is, "BUCKLE-CKPT state"));
    std::string word;
    in >> word;
    if (word != "state") throw FormatError("BUCKLE-CKPT: missing state line");
    int seen = 0;
    while (in >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos) throw FormatError("BUCKLE-CKPT: malformed state entry '" + word + "'");
      const std::string key = word.substr(0, eq);
      const std::string val = word.substr(eq + 1);
      const std::string what = "BUCKLE-CKPT " + key;
      ++seen;
      if (key == "epsilon") s.cfg.epsilon = parse_real(val, what);
      else if (key == "omega0") s.cfg.omega0 = parse_real(val, what);
      else if (key == "delta") s.cfg.delta = parse_real(val, what);
      else if (key == "variant") {
        if (val == "one_sided") s.cfg.variant = PenaltyVariant::OneSided;
        else if (val == "two_sided") s.cfg.variant = PenaltyVariant::TwoSided;
        else throw FormatError("BUCKLE-CKPT: unknown variant '" + val + "'");
      } else if (key == "step") s.step = parse_real(val, what);
      else if (key == "iter") s.iter = static_cast<int>(parse_int(val, what));
      else if (key == "stall") s.stall = static_cast<int>(parse_int(val, what));
      else if (key == "total") s.total = parse_real(val, what);
      else if (key == "converged") s.converged = parse_int(val, what) != 0;
      else if (key == "rng_seed") s.rng_seed = static_cast<std::uint64_t>(std::stoull(val));
      else throw FormatError("BUCKLE-CKPT: unknown state key '" + key + "'");
    }
    if (seen != 10) throw FormatError("BUCKLE-CKPT: state line needs 10 entries, found " + std::to_string(seen));
  }
  {
    std::istringstream in(next_line(is, "BUCKLE-CKPT schedule"));
    std::string word;
    in >> word;
    if (word != "schedule") throw FormatError("BUCKLE-CKPT: missing schedule line");
    std::string count_s;
    in >> count_s;
    const long count = parse_int(count_s, "BUCKLE-CKPT schedule count");
    for (long i = 0; i < count; ++i) {
      if (!(in >> word)) throw FormatError("BUCKLE-CKPT: schedule shorter than its count");
      s.epsilon_schedule.push_back(parse_real(word, "BUCKLE-CKPT schedule"));
    }
  }
  {
    std::istringstream in(next_line(is, "BUCKLE-CKPT history"));
    std::string word, count_s;
    in >> word >> count_s;
    if (word != "history") throw FormatError("BUCKLE-CKPT: missing history line");
    const long count = parse_int(count_s, "BUCKLE-CKPT history count");
    for (long i = 0; i < count; ++i) {
      std::istringstream row(next_line(is, "BUCKLE-CKPT history"));
      std::string f[5];
      if (!(row >> f[0] >> f[1] >> f[2] >> f[3] >> f[4])) {
        throw FormatError("BUCKLE-CKPT: history row " + std::to_string(i) + " needs 5 entries");
      }
      HistoryEntry h;
      h.iter = static_cast<int>(parse_int(f[0], "BUCKLE-CKPT history iter"));
      h.total = parse_real(f[1], "BUCKLE-CKPT history total");
      h.rayleigh = parse_real(f[2], "BUCKLE-CKPT history rayleigh");
      h.exact_measure = parse_real(f[3], "BUCKLE-CKPT history measure");
      h.penalty = parse_real(f[4], "BUCKLE-CKPT history penalty");
      s.history.push_back(h);
    }
    if (s.history.empty()) throw FormatError("BUCKLE-CKPT: history must hold at least the starting entry");
  }
  s.u = read_field(is);
  return ck;
}

namespace {

void write_pgm_raster(std::ostream& os, const Grid& g, int w, int hgt, const std::vector<double>& px) {
  os << "P5\n" << w << ' ' << hgt << "\n255\n";
  for (int r = hgt - 1; r >= 0; --r) {
    for (int c = 0; c < w; ++c) {
      const double x = std::clamp(px[static_cast<std::size_t>(r) * w + c], 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x))));
    }
  }
  (void)g;
}

}  // namespace

void write_pgm(std::ostream& os, const ScalarField& v) {
  const Grid& g = v.grid();
  if (g.dim() != 2) throw ContractError("write_pgm: raster output needs a 2D grid");
  const double m = v.max_abs();
  std::vector<double> px(v.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = m > 0.0 ? std::abs(v[i]) / m : 0.0;
  write_pgm_raster(os, g, g.nodes(0), g.nodes(1), px);
}

void write_pgm(std::ostream& os, const DomainMask& mask) {
  const Grid& g = mask.grid();
  if (g.dim() != 2) throw ContractError("write_pgm: raster output needs a 2D grid");
  std::vector<double> px(g.cell_count());
  for (std::size_t c = 0; c < px.size(); ++c) px[c] = mask.active(c) ? 1.0 : 0.0;
  write_pgm_raster(os, g, g.cells(0), g.cells(1), px);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "' for reading");
  return is;
}

}  // namespace

void save_field(const std::filesystem::path& path, const ScalarField& v) {
  auto os = open_out(path);
  write_field(os, v);
}

ScalarField load_field(const std::filesystem::path& path, std::optional<int> expected_dim) {
  auto is = open_in(path);
  return read_field(is, expected_dim);
}

void save_mask(const std::filesystem::path& path, const DomainMask& mask) {
  auto os = open_out(path);
  write_mask(os, mask);
}

DomainMask load_mask(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_mask(is);
}

}  // namespace buckle
