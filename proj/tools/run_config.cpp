#include "run_config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "channel_eq/errors.hpp"

namespace channel_eq::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": not a number: '" + text + "'");
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": not an integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"geometry",
       {
           {"L", [](RunConfig& c, const std::string& v) { c.geometry.L = to_double("L", v); }},
           {"d", [](RunConfig& c, const std::string& v) { c.geometry.d = to_double("d", v); }},
           {"X", [](RunConfig& c, const std::string& v) { c.geometry.X = to_double("X", v); }},
           {"mode",
            [](RunConfig& c, const std::string& v) {
              Mode m;
              try {
                m = parse_mode(trim(v));
              } catch (const std::exception&) {
                throw ConfigError("mode: expected translation or rotation, got '" + v + "'");
              }
              c.geometry.state = make_state(m, c.position());
            }},
           {"position",
            [](RunConfig& c, const std::string& v) {
              c.geometry.state = make_state(c.mode(), to_double("position", v));
            }},
       }},
      {"solver",
       {
           {"R", [](RunConfig& c, const std::string& v) { c.solver.R = to_double("R", v); }},
           {"lambda", [](RunConfig& c, const std::string& v) { c.solver.lambda = to_double("lambda", v); }},
           {"newton_tol",
            [](RunConfig& c, const std::string& v) { c.solver.newton_tol = to_double("newton_tol", v); }},
           {"max_newton",
            [](RunConfig& c, const std::string& v) {
              c.solver.max_newton = static_cast<int>(to_long("max_newton", v));
            }},
           {"picard_warmup",
            [](RunConfig& c, const std::string& v) {
              c.solver.picard_warmup = static_cast<int>(to_long("picard_warmup", v));
            }},
           {"continuation_steps",
            [](RunConfig& c, const std::string& v) {
              const long n = to_long("continuation_steps", v);
              if (n < 0) throw ConfigError("continuation_steps must be >= 0");
              c.solver.continuation_steps = n == 0 ? std::nullopt : std::optional<int>(static_cast<int>(n));
            }},
           {"max_total_iterations",
            [](RunConfig& c, const std::string& v) {
              c.solver.max_total_iterations = static_cast<int>(to_long("max_total_iterations", v));
            }},
       }},
      {"mesh",
       {
           {"target_h", [](RunConfig& c, const std::string& v) { c.mesh.target_h = to_double("target_h", v); }},
           {"grading", [](RunConfig& c, const std::string& v) { c.mesh.grading = to_double("grading", v); }},
           {"symmetrize",
            [](RunConfig& c, const std::string& v) { c.mesh.symmetrize = to_bool("symmetrize", v); }},
           {"refinements",
            [](RunConfig& c, const std::string& v) {
              const long n = to_long("refinements", v);
              if (n < 0) throw ConfigError("refinements must be >= 0");
              c.mesh.refinements = static_cast<int>(n);
            }},
           {"corner_radius",
            [](RunConfig& c, const std::string& v) { c.mesh.corner_radius = to_double("corner_radius", v); }},
       }},
      {"force",
       {
           {"family",
            [](RunConfig& c, const std::string& v) {
              const std::string f = trim(v);
              if (f != "auto" && f != "spring" && f != "torsion" && f != "table")
                throw ConfigError("family: expected auto, spring, torsion or table, got '" + v + "'");
              c.family = f;
            }},
           {"kappa", [](RunConfig& c, const std::string& v) { c.kappa = to_double("kappa", v); }},
           {"p", [](RunConfig& c, const std::string& v) { c.p = to_double("p", v); }},
           {"table",
            [](RunConfig& c, const std::string& v) {
              c.table.clear();
              for (const std::string& pair : split(v, ',')) {
                const auto colon = pair.find(':');
                if (colon == std::string::npos) throw ConfigError("table: expected x:y pairs, got '" + pair + "'");
                c.table.emplace_back(to_double("table", pair.substr(0, colon)),
                                     to_double("table", pair.substr(colon + 1)));
              }
            }},
       }},
      {"experiment",
       {
           {"positions", [](RunConfig& c, const std::string& v) { c.positions = parse_list(v); }},
           {"grid_n",
            [](RunConfig& c, const std::string& v) { c.roots.grid_n = static_cast<int>(to_long("grid_n", v)); }},
           {"root_tol", [](RunConfig& c, const std::string& v) { c.roots.root_tol = to_double("root_tol", v); }},
           {"margin", [](RunConfig& c, const std::string& v) { c.roots.margin = to_double("margin", v); }},
           {"zero_tol", [](RunConfig& c, const std::string& v) { c.roots.zero_tol = to_double("zero_tol", v); }},
           {"R_list", [](RunConfig& c, const std::string& v) { c.R_list = parse_list(v); }},
           {"lambda_list", [](RunConfig& c, const std::string& v) { c.lambda_list = parse_list(v); }},
           {"mms_h", [](RunConfig& c, const std::string& v) { c.mms_h = parse_list(v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_long("seed", v); }},
       }},
      {"output",
       {
           {"directory", [](RunConfig& c, const std::string& v) { c.directory = trim(v); }},
           {"formats",
            [](RunConfig& c, const std::string& v) {
              c.write_csv = c.write_vtk = false;
              for (const std::string& f : split(v, ',')) {
                if (f == "csv")
                  c.write_csv = true;
                else if (f == "vtk")
                  c.write_vtk = true;
                else
                  throw ConfigError("formats: unknown format '" + f + "'");
              }
            }},
       }},
  };
  return table;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) out.push_back(to_double("list", item));
  return out;
}

void set_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto s = table.find(section);
  if (s == table.end()) throw ConfigError("unknown section [" + section + "]");
  const auto k = s->second.find(key);
  if (k == s->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  k->second(cfg, value);
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!setters().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
    if (section.empty()) throw ConfigError(where + "key outside any section");
    try {
      set_value(cfg, section, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

RestoringForce RunConfig::force() const {
  std::string f = family;
  if (f == "auto") f = mode() == Mode::Translation ? "spring" : "torsion";
  if (f == "spring") return VerticalSpring{kappa, p};
  if (f == "torsion") return TorsionSpring{kappa};
  return UserTable{table};
}

Problem RunConfig::problem() const {
  Problem pr;
  pr.geometry = geometry;
  pr.solver = solver;
  pr.force = force();
  pr.resolution = mesh;
  return pr;
}

}  // namespace channel_eq::cli
