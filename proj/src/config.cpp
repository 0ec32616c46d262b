#include "ncps/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ncps {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_real(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a real number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// "name(args)" -> {name, args}; args empty when there are no parentheses.
std::pair<std::string, std::string> call_form(const std::string& spec, const std::string& key) {
  const std::string s = trim(spec);
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, ""};
  if (s.back() != ')') throw ConfigError(key, "unterminated parameter list in '" + spec + "'");
  return {trim(s.substr(0, open)), s.substr(open + 1, s.size() - open - 2)};
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "system.d",         "system.gamma",      "system.b",        "system.sigma",  "system.x0",
      "system.T",         "experiment.schemes", "experiment.k_min", "experiment.k_max", "experiment.M",
      "experiment.seed",  "experiment.level",  "experiment.paths", "solver.tol",    "solver.max_iter",
      "output.directory", "output.formats"};
  return keys;
}

// Routes a validate_system message to the config key it concerns.
std::string key_for_violation(const std::string& msg) {
  if (msg.rfind("gamma", 0) == 0) return "system.gamma";
  if (msg.rfind("x0", 0) == 0) return "system.x0";
  if (msg.rfind("sigma", 0) == 0) return "system.sigma";
  if (msg.rfind("b", 0) == 0) return "system.b";
  if (msg.rfind("horizon", 0) == 0) return "system.T";
  return "system.d";
}

std::vector<ScalarField> parse_field_list(const std::string& spec, std::size_t d, const std::string& key) {
  const auto names = split(spec, ';');
  if (names.size() != 1 && names.size() != d) {
    throw ConfigError(key, "expected 1 or " + std::to_string(d) + " ';'-separated entries, got " +
                               std::to_string(names.size()));
  }
  std::vector<ScalarField> out;
  try {
    for (const auto& n : names) out.push_back(make_field(n));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
  if (out.size() == 1) out.assign(d, out.front());
  return out;
}

}  // namespace

const std::string* RawConfig::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

void RawConfig::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(key, std::move(value));
}

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where, "malformed section header '" + t + "'");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value', got '" + t + "'");
    if (section.empty()) throw ConfigError(where, "key outside of any [section]");
    const std::string key = section + "." + trim(std::string_view(t).substr(0, eq));
    if (!known_keys().count(key)) throw ConfigError(key, "unknown key");
    if (raw.find(key)) throw ConfigError(key, "duplicate key");
    raw.entries.emplace_back(key, trim(std::string_view(t).substr(eq + 1)));
  }
  return raw;
}

RawConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(RawConfig& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", "override '" + assignment + "' is not of the form key=value");
  const std::string key = trim(std::string_view(assignment).substr(0, eq));
  if (!known_keys().count(key)) throw ConfigError(key, "unknown key in override");
  raw.set(key, trim(std::string_view(assignment).substr(eq + 1)));
}

InteractionMatrix parse_gamma(const std::string& spec, std::size_t d) {
  const std::string key = "system.gamma";
  const auto [name, args] = call_form(spec, key);
  if (name == "none") return InteractionMatrix(d);
  if (name == "nearest_neighbor") return InteractionMatrix::nearest_neighbor(d, to_real(args, key));
  if (name == "all_pairs") return InteractionMatrix::all_pairs(d, to_real(args, key));
  if (name == "matrix") {
    const auto rows = split(args, ';');
    if (rows.size() != d) throw ConfigError(key, "matrix needs " + std::to_string(d) + " rows separated by ';'");
    std::vector<double> entries;
    for (const auto& row : rows) {
      const auto cells = split(row, ',');
      if (cells.size() != d) throw ConfigError(key, "every matrix row needs " + std::to_string(d) + " entries");
      for (const auto& c : cells) entries.push_back(to_real(c, key));
    }
    return InteractionMatrix::from_dense(d, std::move(entries));
  }
  throw ConfigError(key, "unknown gamma form '" + spec + "'");
}

std::vector<double> parse_x0(const std::string& spec, std::size_t d) {
  const std::string key = "system.x0";
  const auto [name, args] = call_form(spec, key);
  if (name == "arithmetic") {
    const auto parts = split(args, ',');
    if (parts.size() != 2) throw ConfigError(key, "arithmetic(start, step) takes two parameters");
    const double start = to_real(parts[0], key);
    const double step = to_real(parts[1], key);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = start + step * static_cast<double>(i);
    return x;
  }
  std::vector<double> x;
  for (const auto& item : split(spec, ',')) x.push_back(to_real(item, key));
  if (x.size() != d) {
    throw ConfigError(key, "has " + std::to_string(x.size()) + " entries but d = " + std::to_string(d));
  }
  return x;
}

RunConfig build_run_config(const RawConfig& raw) {
  RunConfig cfg;
  auto get = [&](const std::string& key) -> const std::string& {
    const std::string* v = raw.find(key);
    if (!v) throw ConfigError(key, "missing required key");
    return *v;
  };
  auto opt = [&](const std::string& key) { return raw.find(key); };

  cfg.d = static_cast<std::size_t>(to_unsigned(get("system.d"), "system.d"));
  if (cfg.d < 1) throw ConfigError("system.d", "must be >= 1");
  cfg.gamma_spec = get("system.gamma");
  cfg.b_spec = get("system.b");
  cfg.sigma_spec = get("system.sigma");
  cfg.x0_spec = get("system.x0");
  if (const auto* t = opt("system.T")) cfg.horizon = to_real(*t, "system.T");

  cfg.system.d = cfg.d;
  cfg.system.gamma = parse_gamma(cfg.gamma_spec, cfg.d);
  cfg.system.b = parse_field_list(cfg.b_spec, cfg.d, "system.b");
  cfg.system.sigma = parse_field_list(cfg.sigma_spec, cfg.d, "system.sigma");
  cfg.system.x0 = parse_x0(cfg.x0_spec, cfg.d);
  cfg.system.horizon = cfg.horizon;
  const auto check = validate_system(cfg.system);
  if (!check.ok()) throw ConfigError(key_for_violation(check.violations.front()), check.violations.front());
  cfg.warnings = check.warnings;

  if (const auto* s = opt("experiment.schemes")) {
    cfg.schemes.clear();
    try {
      for (const auto& name : split(*s, ',')) cfg.schemes.push_back(parse_scheme(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("experiment.schemes", e.what());
    }
    std::set<SchemeKind> seen(cfg.schemes.begin(), cfg.schemes.end());
    if (seen.size() != cfg.schemes.size()) throw ConfigError("experiment.schemes", "duplicate scheme");
  }
  if (const auto* v = opt("experiment.k_min")) cfg.k_min = static_cast<unsigned>(to_unsigned(*v, "experiment.k_min"));
  if (const auto* v = opt("experiment.k_max")) cfg.k_max = static_cast<unsigned>(to_unsigned(*v, "experiment.k_max"));
  if (cfg.k_max < cfg.k_min + 1) throw ConfigError("experiment.k_max", "must be >= k_min + 1");
  if (cfg.k_max > 24) throw ConfigError("experiment.k_max", "must be <= 24");
  if (const auto* v = opt("experiment.M")) cfg.paths_mc = static_cast<std::size_t>(to_unsigned(*v, "experiment.M"));
  if (cfg.paths_mc < 2) throw ConfigError("experiment.M", "must be >= 2");
  if (const auto* v = opt("experiment.seed")) cfg.seed = to_unsigned(*v, "experiment.seed");
  if (const auto* v = opt("experiment.level")) cfg.level = static_cast<unsigned>(to_unsigned(*v, "experiment.level"));
  if (cfg.level > 24) throw ConfigError("experiment.level", "must be <= 24");
  if (const auto* v = opt("experiment.paths")) {
    cfg.paths_simulate = static_cast<std::size_t>(to_unsigned(*v, "experiment.paths"));
  }
  if (cfg.paths_simulate < 1) throw ConfigError("experiment.paths", "must be >= 1");

  if (const auto* v = opt("solver.tol")) cfg.solver.residual_tol = to_real(*v, "solver.tol");
  if (!(cfg.solver.residual_tol > 0.0)) throw ConfigError("solver.tol", "must be > 0");
  if (const auto* v = opt("solver.max_iter")) {
    cfg.solver.max_iter = static_cast<int>(to_unsigned(*v, "solver.max_iter"));
  }
  if (cfg.solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");

  if (const auto* v = opt("output.directory")) cfg.output_dir = *v;
  if (cfg.output_dir.empty()) throw ConfigError("output.directory", "must not be empty");
  if (const auto* v = opt("output.formats")) {
    cfg.formats = split(*v, ',');
    for (const auto& f : cfg.formats)
      if (f != "csv" && f != "increments") {
        throw ConfigError("output.formats", "unsupported format '" + f + "' (csv, increments)");
      }
  }
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[system]\n"
      << "d = " << cfg.d << '\n'
      << "gamma = " << cfg.gamma_spec << '\n'
      << "b = " << cfg.b_spec << '\n'
      << "sigma = " << cfg.sigma_spec << '\n'
      << "x0 = " << cfg.x0_spec << '\n'
      << "T = " << format_real(cfg.horizon) << "\n\n";
  out << "[experiment]\nschemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) out << (i ? ", " : "") << to_string(cfg.schemes[i]);
  out << '\n'
      << "k_min = " << cfg.k_min << '\n'
      << "k_max = " << cfg.k_max << '\n'
      << "M = " << cfg.paths_mc << '\n'
      << "seed = " << cfg.seed << '\n'
      << "level = " << cfg.level << '\n'
      << "paths = " << cfg.paths_simulate << "\n\n";
  out << "[solver]\n"
      << "tol = " << format_real(cfg.solver.residual_tol) << '\n'
      << "max_iter = " << cfg.solver.max_iter << "\n\n";
  out << "[output]\n"
      << "directory = " << cfg.output_dir << '\n'
      << "formats = ";
  for (std::size_t i = 0; i < cfg.formats.size(); ++i) out << (i ? ", " : "") << cfg.formats[i];
  out << '\n';
  return out.str();
}

}  // namespace ncps
