#include "polymerlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polymerlab/errors.hpp"
#include "polymerlab/lattice.hpp"

namespace polymerlab::experiments {

int ExperimentConfig::max_n() const {
  if (n_grid.empty()) throw ParameterError("n_grid is empty");
  return *std::max_element(n_grid.begin(), n_grid.end());
}

int ExperimentConfig::mixing_time() const {
  if (mixing_n0 > 0) return mixing_n0;
  if (n_grid.empty()) throw ParameterError("n_grid is empty");
  return std::max(1, *std::min_element(n_grid.begin(), n_grid.end()) / 2);
}

void ExperimentConfig::validate() const {
  Dimension dim(d);
  if (n_grid.empty()) throw ParameterError("run.n_grid must not be empty");
  for (int n : n_grid)
    if (n < 1) throw ParameterError("run.n_grid entries must be >= 1");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
    throw ParameterError("run.n_grid must be strictly increasing");
  if (horizon_factor < 4) throw ParameterError("run.horizon_factor must be >= 4");
  if (replicates < 100) throw ParameterError("run.replicates must be >= 100");
  if (block_size < 1) throw ParameterError("run.block_size must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("model.beta must be finite and >= 0");
  if (!(lk_exponent > 0.0 && lk_exponent < 0.5)) throw ParameterError("polymer.lk_exponent must lie in (0, 1/2)");
  if (!(box_sigmas >= 3.0)) throw ParameterError("polymer.box_sigmas must be >= 3");
  if (alpha_grid.empty()) throw ParameterError("polymer.alpha_grid must not be empty");
  for (double a : alpha_grid)
    if (!(a > 0.0)) throw ParameterError("polymer.alpha_grid entries must be > 0");
  if (!(homog_alpha > 0.0) || !(llt_alpha > 0.0)) throw ParameterError("window radii must be > 0");
  for (int k : homog_k)
    if (k < 3) throw ParameterError("homog.k_grid entries must be >= 3");
  for (int k : llt_k)
    if (k < 3) throw ParameterError("llt.k_grid entries must be >= 3");
  for (double e : eps_grid)
    if (!(e > 0.0)) throw ParameterError("lindeberg.eps_grid entries must be > 0");
  if (mixing_n0 < 0) throw ParameterError("mixing.n0 must be >= 0");
  if (mixing_time() > horizon()) throw ParameterError("mixing.n0 beyond the horizon");
  const auto profile = env::temperature_profile(family, beta, dim);
  if (!std::isfinite(profile.lambda2)) throw ParameterError("lambda(beta) is infinite for this family");
  for (int k : llt_k)
    if (2 * static_cast<int>(std::ceil(std::pow(k, lk_exponent) - 1e-9)) >= k)
      throw ParameterError("llt.k_grid entry " + std::to_string(k) + " violates l_k < k/2");
  if (!profile.in_L2_region && !allow_outside_l2)
    throw ParameterError("beta lies outside the L2 region (beta2 = " + std::to_string(profile.beta2) + ")");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError(key + ": not a number: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParameterError(key + ": not an integer: '" + v + "'");
  }
}

std::vector<std::string> split_list(std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ParameterError("unterminated list: " + v);
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
  return s + "]";
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParameterError(key + ": not a boolean: '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::string family = "gaussian";
  std::vector<double> params;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (seen[key]++) throw ParameterError("duplicate key " + key);
    auto ints = [&] {
      std::vector<int> out;
      for (const auto& s : split_list(v)) out.push_back(static_cast<int>(to_int(key, s)));
      return out;
    };
    auto doubles = [&] {
      std::vector<double> out;
      for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
      return out;
    };
    if (key == "model.d") c.d = static_cast<int>(to_int(key, v));
    else if (key == "model.beta") c.beta = to_double(key, v);
    else if (key == "env.family") family = v;
    else if (key == "env.params") params = doubles();
    else if (key == "env.seed") {
      const long long s = to_int(key, v);
      if (s < 0) throw ParameterError("env.seed must be >= 0");
      c.seed_base = static_cast<std::uint64_t>(s);
    }
    else if (key == "run.n_grid") c.n_grid = ints();
    else if (key == "run.horizon_factor") c.horizon_factor = static_cast<int>(to_int(key, v));
    else if (key == "run.replicates") c.replicates = static_cast<int>(to_int(key, v));
    else if (key == "run.block_size") c.block_size = static_cast<int>(to_int(key, v));
    else if (key == "run.allow_outside_l2") c.allow_outside_l2 = to_bool(key, v);
    else if (key == "polymer.lk_exponent") c.lk_exponent = to_double(key, v);
    else if (key == "polymer.box_sigmas") c.box_sigmas = to_double(key, v);
    else if (key == "polymer.alpha_grid") c.alpha_grid = doubles();
    else if (key == "homog.alpha") c.homog_alpha = to_double(key, v);
    else if (key == "homog.k_grid") c.homog_k = ints();
    else if (key == "llt.k_grid") c.llt_k = ints();
    else if (key == "llt.alpha") c.llt_alpha = to_double(key, v);
    else if (key == "lindeberg.eps_grid") c.eps_grid = doubles();
    else if (key == "mixing.n0") c.mixing_n0 = static_cast<int>(to_int(key, v));
    else throw ParameterError("unknown config key " + key);
  }
  c.family = env::DisorderFamily::parse(family, params);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& c) {
  auto i = [](int x) { return std::to_string(x); };
  std::map<std::string, std::string> m;
  m["model.d"] = i(c.d);
  m["model.beta"] = fmt(c.beta);
  m["env.family"] = c.family.name();
  m["env.params"] = join(c.family.params(), fmt);
  m["env.seed"] = std::to_string(c.seed_base);
  m["run.n_grid"] = join(c.n_grid, i);
  m["run.horizon_factor"] = i(c.horizon_factor);
  m["run.replicates"] = i(c.replicates);
  m["run.block_size"] = i(c.block_size);
  m["run.allow_outside_l2"] = c.allow_outside_l2 ? "true" : "false";
  m["polymer.lk_exponent"] = fmt(c.lk_exponent);
  m["polymer.box_sigmas"] = fmt(c.box_sigmas);
  m["polymer.alpha_grid"] = join(c.alpha_grid, fmt);
  m["homog.alpha"] = fmt(c.homog_alpha);
  m["homog.k_grid"] = join(c.homog_k, i);
  m["llt.k_grid"] = join(c.llt_k, i);
  m["llt.alpha"] = fmt(c.llt_alpha);
  m["lindeberg.eps_grid"] = join(c.eps_grid, fmt);
  m["mixing.n0"] = i(c.mixing_n0);
  return m;
}

std::string format_config(const ExperimentConfig& c) {
  std::string s;
  for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace polymerlab::experiments
