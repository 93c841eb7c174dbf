#pragma once

// Flat key=value experiment configuration with dotted keys.
//
//   # comment
//   experiment = srw-cover
//   srw.r = 30, 60, 120
//   seed = 42

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyDoc {
  const char* key;
  const char* fallback;  // empty: no default
  const char* help;
};

// Every accepted key. `covlab --help-keys` prints this table.
inline const std::vector<KeyDoc>& documented_keys() {
  static const std::vector<KeyDoc> keys = {
      {"experiment", "", "srw-cover | sausage-cover | hitting | exit-time | iid-cover | coupling | torus-cover | series-scan | lil-statistic"},
      {"seed", "1", "64-bit master seed"},
      {"workers", "1", "worker threads"},
      {"out", "", "record file (JSONL); summary goes to <out>.summary.csv"},
      {"budget.steps", "10000000000", "per-run step cap (lattice steps or Gaussian sub-steps)"},
      {"srw.r", "30", "disk radii, list"},
      {"srw.samples", "200", "runs per radius"},
      {"srw.far_field", "none", "none | return | full"},
      {"srw.l_in", "0", "far-field landing radius (0: 3r)"},
      {"srw.l_out", "0", "far-field switch radius (0: 4r)"},
      {"sausage.r", "30", "disk radii, list"},
      {"sausage.samples", "100", "runs per radius"},
      {"sausage.R", "0.1", "outer circle is 2 R wp(r)"},
      {"sausage.dt", "0.01", "base time step"},
      {"sausage.refine", "0", "bridge refinements of dt"},
      {"sausage.h", "0.2", "cell size"},
      {"sausage.radius", "1", "sausage radius"},
      {"hitting.target", "circle", "circle: P{zeta(rho) < zeta(P)}; origin: P{zeta(0) < zeta(P)}"},
      {"hitting.rho", "8", "inner radius (target=circle)"},
      {"hitting.r", "40", "start radius; start is (floor(r)+1, 0)"},
      {"hitting.P", "200", "outer radius"},
      {"hitting.samples", "10000", "walks"},
      {"hitting.symmetrized", "false", "start at a random lattice image of the start point"},
      {"hitting.exact", "false", "also solve the exact linear system"},
      {"exit.engine", "lattice", "lattice | brownian"},
      {"exit.r", "50", "disk radius"},
      {"exit.samples", "2000", "runs"},
      {"exit.eps", "0.25", "tail window exponent"},
      {"exit.dt", "0.001", "time step (brownian)"},
      {"exit.refine", "0", "bridge refinements (brownian)"},
      {"iid.r", "40", "disk radius"},
      {"iid.k_phi", "0.33, 1.33", "union sizes as multiples of phi_r, list"},
      {"iid.k", "", "explicit union sizes, list (overrides iid.k_phi)"},
      {"iid.trials", "200", "trials per k"},
      {"iid.kind", "C", "C | E | F"},
      {"coupling.r", "30", "disk radius"},
      {"coupling.runs", "500", "runs"},
      {"coupling.c1", "auto", "xi success probability is c1/(log r)^2; auto fits c1 by exact solve"},
      {"coupling.u", "1", "number of xi draws is floor(u phi_r)"},
      {"coupling.force_zero_xi", "false", "suppress all discrepancies"},
      {"torus.eps", "0.05, 0.02, 0.01", "epsilons, list"},
      {"torus.samples", "50", "runs per epsilon"},
      {"torus.dt", "0", "time step (0: eps^2/25)"},
      {"series.lambda", "0.2, 0.25, 0.3", "lambdas, list"},
      {"series.alpha", "1.05", "schedule base"},
      {"series.eps1", "0.01", ""},
      {"series.eps2", "0.01", ""},
      {"series.n", "100, 1000, 5000, 10000", "indices for tilde_event_prob, list"},
      {"lil.extent", "200", "largest tracked radius"},
      {"lil.first", "16", "first checkpoint"},
      {"lil.last", "100000000", "last checkpoint"},
      {"lil.ratio", "2", "checkpoint ratio"},
      {"lil.samples", "10", "walks"},
  };
  return keys;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>") {
    Config c;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
      c.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse(in, path);
  }

  /// Rejects keys that are not documented.
  void set(const std::string& key, const std::string& value) {
    bool known = false;
    for (const auto& d : documented_keys()) known = known || key == d.key;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
    kv_[key] = value;
  }

  /// "key=value" form used by --set.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + kv + "'");
    set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get(const std::string& key) const {
    if (auto it = kv_.find(key); it != kv_.end()) return it->second;
    for (const auto& d : documented_keys())
      if (key == d.key) return d.fallback;
    throw ConfigError("undocumented key '" + key + "'");
  }

  double get_double(const std::string& key) const { return to_double(key, get(key)); }

  std::int64_t get_int(const std::string& key) const { return to_int(key, get(key)); }

  std::uint64_t get_u64(const std::string& key) const {
    const auto v = get(key);
    try {
      std::size_t pos = 0;
      const auto out = std::stoull(v, &pos, 0);
      if (pos != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    }
  }

  bool get_bool(const std::string& key) const {
    const auto v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(get(key))) out.push_back(to_double(key, item));
    return out;
  }

  std::vector<std::int64_t> get_ints(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& item : split(get(key))) out.push_back(to_int(key, item));
    return out;
  }

  /// Keys set explicitly, in sorted order.
  const std::map<std::string, std::string>& explicit_values() const { return kv_; }

 private:
  static std::vector<std::string> split(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
  }
  static std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const auto out = std::stoll(v, &pos, 0);
      if (pos != v.size()) {
        // Allow 1e10-style integers.
        const double d = to_double(key, v);
        if (d != static_cast<double>(static_cast<std::int64_t>(d))) throw std::invalid_argument(v);
        return static_cast<std::int64_t>(d);
      }
      return out;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace covlab
