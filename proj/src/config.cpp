#include "metastab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace metastab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"potential", {"expression"}},
      {"domain", {"kind", "bounds"}},
      {"ladder", {"h"}},
      {"mesh", {"n", "flux"}},
      {"sde",
       {"enabled", "dt", "n_traj", "seed", "bridge", "max_steps", "budget", "particles", "t_total", "burn_fraction",
        "start", "workers"}},
      {"symmetry", {"map"}},
      {"bins", {"radius"}},
      {"output", {"dir", "formats"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
    throw ConfigError(what + ": '" + text + "' is not a finite number");
  return v;
}

long to_long(const std::string& text, const std::string& what) {
  const double v = to_double(text, what);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(what + ": '" + text + "' is not an integer");
  return static_cast<long>(v);
}

bool to_bool(const std::string& text, const std::string& what) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError(what + ": '" + text + "' is not a boolean");
}

}  // namespace

std::vector<std::string> parse_word_list(const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& w : parse_word_list(text)) out.push_back(to_double(w, what));
  return out;
}

void RunConfig::validate() const {
  if (trim(expression).empty()) throw ConfigError("[potential] expression is missing");
  try {
    domain.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[domain] ") + e.what());
  }
  if (ladder.empty()) throw ConfigError("[ladder] h is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0)) throw ConfigError("[ladder] h values must be positive");
    if (i > 0 && !(ladder[i] < ladder[i - 1])) {
      std::ostringstream os;
      os << "[ladder] h must be strictly decreasing; " << ladder[i] << " follows " << ladder[i - 1];
      throw ConfigError(os.str());
    }
  }
  if (mesh < 64) throw ConfigError("[mesh] n must be at least 64");
  if (!(sde.dt > 0) || sde.dt > 1e-2) throw ConfigError("[sde] dt must lie in (0, 1e-2]");
  if (sde.n_traj < 1) throw ConfigError("[sde] n_traj must be positive");
  if (sde.max_steps < 1) throw ConfigError("[sde] max_steps must be positive");
  if (!(sde.budget > 0)) throw ConfigError("[sde] budget must be positive");
  if (sde.particles != 0 && sde.particles < 100) throw ConfigError("[sde] particles must be 0 or at least 100");
  if (!(sde.t_total > 0)) throw ConfigError("[sde] t_total must be positive");
  if (!(sde.burn_fraction >= 0 && sde.burn_fraction < 1)) throw ConfigError("[sde] burn_fraction must lie in [0, 1)");
  if (sde.start != "uniform" && sde.start != "qsd") throw ConfigError("[sde] start must be uniform or qsd");
  if (sde.workers < 1) throw ConfigError("[sde] workers must be positive");
  if (bin_radius < 0) throw ConfigError("[bins] radius must be non-negative");
  for (const auto& f : formats)
    if (f != "json" && f != "csv" && f != "gnuplot") throw ConfigError("[output] unknown format '" + f + "'");
}

RunConfig parse_config(std::istream& in, const std::string& name) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(name + ": " + e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [section, keys] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError(name + ": unknown section [" + section + "]");
    if (!keys.data().empty()) throw ConfigError(name + ": key '" + section + "' outside any section");
    for (const auto& [key, value] : keys)
      if (!it->second.count(key)) throw ConfigError(name + ": unknown key '" + key + "' in [" + section + "]");
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  RunConfig c;
  c.name = name;
  c.expression = get("potential.expression").value_or("");

  const std::string kind = get("domain.kind").value_or("");
  const auto bounds = parse_number_list(get("domain.bounds").value_or(""), "[domain] bounds");
  auto need = [&](std::size_t n) {
    if (bounds.size() != n)
      throw ConfigError("[domain] bounds for " + kind + " takes " + std::to_string(n) + " numbers, got " +
                        std::to_string(bounds.size()));
  };
  if (kind == "interval") {
    need(2);
    c.domain = Domain::interval(bounds[0], bounds[1]);
  } else if (kind == "rectangle") {
    need(4);
    c.domain = Domain::rectangle(bounds[0], bounds[1], bounds[2], bounds[3]);
  } else if (kind == "disk") {
    need(3);
    c.domain = Domain::disk(bounds[0], bounds[1], bounds[2]);
  } else {
    throw ConfigError("[domain] kind must be interval, rectangle or disk, got '" + kind + "'");
  }

  c.ladder = parse_number_list(get("ladder.h").value_or(""), "[ladder] h");
  if (auto v = get("mesh.n")) c.mesh = static_cast<int>(to_long(*v, "[mesh] n"));
  if (auto v = get("mesh.flux")) {
    if (*v == "conservative")
      c.flux = FluxScheme::conservative;
    else if (*v == "three_point")
      c.flux = FluxScheme::three_point;
    else
      throw ConfigError("[mesh] flux must be conservative or three_point");
  }

  SdeSettings& s = c.sde;
  if (auto v = get("sde.enabled")) s.enabled = to_bool(*v, "[sde] enabled");
  if (auto v = get("sde.dt")) s.dt = to_double(*v, "[sde] dt");
  if (auto v = get("sde.n_traj")) s.n_traj = static_cast<int>(to_long(*v, "[sde] n_traj"));
  if (auto v = get("sde.seed")) {
    const long seed = to_long(*v, "[sde] seed");
    if (seed < 0) throw ConfigError("[sde] seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = get("sde.bridge")) s.bridge = to_bool(*v, "[sde] bridge");
  if (auto v = get("sde.max_steps")) s.max_steps = to_long(*v, "[sde] max_steps");
  if (auto v = get("sde.budget")) s.budget = to_double(*v, "[sde] budget");
  if (auto v = get("sde.particles")) s.particles = static_cast<int>(to_long(*v, "[sde] particles"));
  if (auto v = get("sde.t_total")) s.t_total = to_double(*v, "[sde] t_total");
  if (auto v = get("sde.burn_fraction")) s.burn_fraction = to_double(*v, "[sde] burn_fraction");
  if (auto v = get("sde.start")) s.start = *v;
  if (auto v = get("sde.workers")) s.workers = static_cast<int>(to_long(*v, "[sde] workers"));

  if (auto v = get("symmetry.map"); v && !v->empty()) c.symmetry = *v;
  if (auto v = get("bins.radius")) c.bin_radius = to_double(*v, "[bins] radius");
  if (auto v = get("output.dir")) c.out_dir = *v;
  if (auto v = get("output.formats")) c.formats = parse_word_list(*v);

  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::filesystem::path(path).stem().string());
}

}  // namespace metastab
