#include "segmap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace segmap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument("'" + v + "' is not a number for " + key);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("'" + v + "' is not an integer for " + key);
  }
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& msg)
    : std::runtime_error("config line " + std::to_string(line) + ": " + msg), line_(line) {}

bool PipelineConfig::is_valid() const {
  return T_p > 0 && tracker.is_valid() && reconstruction.is_valid() && alignment.is_valid() &&
         tracker.n_lim == reconstruction.n_lim;
}

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  return dump_config(*this) == dump_config(o);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "T_p",      "a_lim", "v_lim", "q_lim",   "h_lim",     "t_lim", "n_lim",   "sigma_px",
      "WL",       "SL",    "eps_lim", "r_lim", "alpha_lim", "s_lim", "sigma_c", "ratio_test"};
  return keys;
}

void set_config_value(PipelineConfig& c, const std::string& key, const std::string& v) {
  if (key == "T_p") c.T_p = parse_double(key, v);
  else if (key == "a_lim") c.tracker.a_lim = parse_double(key, v);
  else if (key == "v_lim") c.tracker.v_lim = parse_double(key, v);
  else if (key == "q_lim") c.tracker.q_lim = parse_double(key, v);
  else if (key == "h_lim") c.tracker.h_lim = parse_double(key, v);
  else if (key == "t_lim") c.tracker.t_lim = parse_int(key, v);
  else if (key == "n_lim") c.tracker.n_lim = c.reconstruction.n_lim = parse_int(key, v);
  else if (key == "sigma_px") c.reconstruction.sigma_px = parse_double(key, v);
  else if (key == "WL") c.alignment.WL = parse_int(key, v);
  else if (key == "SL") c.alignment.SL = parse_int(key, v);
  else if (key == "eps_lim") c.alignment.eps_lim = parse_double(key, v);
  else if (key == "r_lim") c.alignment.r_lim = parse_double(key, v);
  else if (key == "alpha_lim") c.alignment.alpha_lim = parse_double(key, v);
  else if (key == "s_lim") c.alignment.s_lim = parse_int(key, v);
  else if (key == "sigma_c") c.alignment.sigma_c = parse_double(key, v);
  else if (key == "ratio_test") c.tracker.ratio_test = parse_double(key, v);
  else throw std::invalid_argument("unknown key '" + key + "'");
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(lineno, "repeated key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(lineno, e.what());
    }
  }
  if (!seen.count("sigma_c")) cfg.alignment.sigma_c = cfg.alignment.eps_lim / 3.0;
  if (!cfg.is_valid()) throw ConfigError(lineno, "parameter values out of range");
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_config(in);
}

std::string dump_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "T_p = " << fmt(c.T_p) << '\n'
      << "a_lim = " << fmt(c.tracker.a_lim) << '\n'
      << "v_lim = " << fmt(c.tracker.v_lim) << '\n'
      << "q_lim = " << fmt(c.tracker.q_lim) << '\n'
      << "h_lim = " << fmt(c.tracker.h_lim) << '\n'
      << "t_lim = " << c.tracker.t_lim << '\n'
      << "n_lim = " << c.tracker.n_lim << '\n'
      << "sigma_px = " << fmt(c.reconstruction.sigma_px) << '\n'
      << "WL = " << c.alignment.WL << '\n'
      << "SL = " << c.alignment.SL << '\n'
      << "eps_lim = " << fmt(c.alignment.eps_lim) << '\n'
      << "r_lim = " << fmt(c.alignment.r_lim) << '\n'
      << "alpha_lim = " << fmt(c.alignment.alpha_lim) << '\n'
      << "s_lim = " << c.alignment.s_lim << '\n'
      << "sigma_c = " << fmt(c.alignment.sigma_c) << '\n'
      << "ratio_test = " << fmt(c.tracker.ratio_test) << '\n';
  return out.str();
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace segmap
