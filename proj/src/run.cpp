#include "polymerlab/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "polymerlab/errors.hpp"
#include "polymerlab/walk.hpp"

namespace polymerlab::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParameterError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json golden_json(const ExperimentConfig& c) {
  const auto& g = walk::golden_constants(Dimension(c.d));
  const auto p = env::temperature_profile(c.family, c.beta, Dimension(c.d));
  return {{"pi_d", g.pi_d},
          {"pi_d_error", g.pi_d_error},
          {"zeta_d", g.zeta_d},
          {"table_kmax", g.table_kmax},
          {"beta2", finite_or_null(p.beta2)},
          {"lambda2", finite_or_null(p.lambda2)},
          {"kappa2", finite_or_null(p.kappa2)},
          {"sigma2", p.sigma2 ? json(*p.sigma2) : json(nullptr)}};
}

json walk_cache_json(const ExperimentConfig& c) {
  const Dimension dim(c.d);
  const auto& g = walk::golden_constants(dim);
  const auto& t = walk::cached_return_probabilities(dim, c.horizon() + 1);
  std::vector<double> p(t.p.begin(), t.p.begin() + c.horizon() + 2);
  return {{"d", c.d},
          {"pi_d", g.pi_d},
          {"pi_d_error", g.pi_d_error},
          {"zeta_d", g.zeta_d},
          {"table_kmax", g.table_kmax},
          {"return_probabilities", p}};
}

std::string block_name(int b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "block_%05d.json", b);
  return buf;
}

json references_json(const ExperimentConfig& c, const Reference& ref) {
  json t = json::object();
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) t[std::to_string(c.n_grid[i])] = ref.truncated[i];
  json j = {{"E_W_inf_sq", finite_or_null(ref.ew_inf_sq)},
            {"sigma2", finite_or_null(ref.sigma2)},
            {"c_K", ref.c_K},
            {"truncated_bracket", t}};
  if (ref.adjudication)
    j["E_W_inf_sq_variant"] = env::to_string(ref.adjudication->closest);
  return j;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ResourceError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

json block_to_json(const Block& b) {
  json j;
  j["index"] = b.index;
  j["samples"] = json::array();
  for (const auto& s : b.samples) {
    json js = {{"replicate", s.replicate},
               {"W_n0", s.W_n0},
               {"clipped_fraction", s.clipped_fraction},
               {"homog_M", s.homog_M},
               {"per_n", json::array()}};
    for (const auto& p : s.per_n) {
      js["per_n"].push_back({{"n", p.n},
                             {"N", p.N},
                             {"W_n", p.W_n},
                             {"W_N", p.W_N},
                             {"T", p.T},
                             {"U", p.U},
                             {"L", p.L},
                             {"s2", p.s2},
                             {"A_bar", p.A_bar},
                             {"D_next", p.D_next},
                             {"bracket", p.bracket},
                             {"lindeberg", p.lindeberg},
                             {"window", p.window}});
    }
    j["samples"].push_back(std::move(js));
  }
  j["llt"] = json::array();
  for (const auto& l : b.llt) {
    std::vector<int> flat;
    for (const auto& x : l.sites) flat.insert(flat.end(), x.begin(), x.end());
    j["llt"].push_back(
        {{"k", l.k}, {"lk", l.lk}, {"count", l.count}, {"sites", flat}, {"sum", l.sum}, {"sum_sq", l.sum_sq}});
  }
  return j;
}

Block block_from_json(const json& j) {
  Block b;
  b.index = j.at("index").get<int>();
  for (const auto& js : j.at("samples")) {
    FluctuationSample s;
    s.replicate = js.at("replicate").get<std::uint64_t>();
    s.W_n0 = js.at("W_n0").get<double>();
    s.clipped_fraction = js.at("clipped_fraction").get<double>();
    s.homog_M = js.at("homog_M").get<std::vector<double>>();
    for (const auto& jp : js.at("per_n")) {
      PerN p;
      p.n = jp.at("n").get<int>();
      p.N = jp.at("N").get<int>();
      p.W_n = jp.at("W_n").get<double>();
      p.W_N = jp.at("W_N").get<double>();
      p.T = jp.at("T").get<double>();
      p.U = jp.at("U").get<double>();
      p.L = jp.at("L").get<double>();
      p.s2 = jp.at("s2").get<double>();
      p.A_bar = jp.at("A_bar").get<double>();
      p.D_next = jp.at("D_next").get<double>();
      p.bracket = jp.at("bracket").get<double>();
      p.lindeberg = jp.at("lindeberg").get<std::vector<double>>();
      p.window = jp.at("window").get<std::vector<double>>();
      s.per_n.push_back(std::move(p));
    }
    b.samples.push_back(std::move(s));
  }
  for (const auto& jl : j.at("llt")) {
    LLTSums l;
    l.k = jl.at("k").get<int>();
    l.lk = jl.at("lk").get<int>();
    l.count = jl.at("count").get<std::uint64_t>();
    l.sum = jl.at("sum").get<std::vector<double>>();
    l.sum_sq = jl.at("sum_sq").get<std::vector<double>>();
    const auto flat = jl.at("sites").get<std::vector<int>>();
    if (flat.size() != kMaxDim * l.sum.size() || l.sum_sq.size() != l.sum.size())
      throw ParameterError("corrupt LLT block");
    for (std::size_t i = 0; i < l.sum.size(); ++i) {
      Site x{};
      for (int c = 0; c < kMaxDim; ++c) x[c] = flat[kMaxDim * i + c];
      l.sites.push_back(x);
    }
    b.llt.push_back(std::move(l));
  }
  return b;
}

std::vector<std::string> samples_header(const ExperimentConfig& c) {
  std::vector<std::string> h = {"replicate", "n",     "N",   "W_n0",  "W_n",    "W_N",       "T_n",
                                "U_n",       "L_n",   "s2_trunc", "A_bar", "D_next", "bracket_n", "clipped_fraction"};
  for (double e : c.eps_grid) h.push_back("lindeberg_eps_" + fmt(e));
  for (double a : c.alpha_grid) h.push_back("window_alpha_" + fmt(a));
  for (int k : c.homog_k) h.push_back("M_k_" + std::to_string(k));
  return h;
}

std::string samples_csv(const Dataset& ds, const ExperimentConfig& c) {
  std::string out;
  const auto h = samples_header(c);
  for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
  out += "\n";
  for (const auto& s : ds.samples) {
    for (const auto& p : s.per_n) {
      std::string row = std::to_string(s.replicate) + "," + std::to_string(p.n) + "," + std::to_string(p.N);
      for (double v : {s.W_n0, p.W_n, p.W_N, p.T, p.U, p.L, p.s2, p.A_bar, p.D_next, p.bracket, s.clipped_fraction})
        row += "," + fmt(v);
      for (double v : p.lindeberg) row += "," + fmt(v);
      for (double v : p.window) row += "," + fmt(v);
      for (double v : s.homog_M) row += "," + fmt(v);
      out += row + "\n";
    }
  }
  return out;
}

Dataset read_samples_csv(const std::string& text, const ExperimentConfig& c) {
  std::stringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    return f;
  };
  if (!std::getline(in, line) || split(line) != samples_header(c))
    throw ParameterError("samples.csv header does not match the config");
  const std::size_t ne = c.eps_grid.size(), na = c.alpha_grid.size(), nh = c.homog_k.size();
  Dataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 14 + ne + na + nh) throw ParameterError("samples.csv row has the wrong width");
    std::vector<double> v;
    for (const auto& x : f) v.push_back(std::stod(x));
    const auto id = static_cast<std::uint64_t>(std::stoull(f[0]));
    if (ds.samples.empty() || ds.samples.back().replicate != id) {
      FluctuationSample s;
      s.replicate = id;
      s.W_n0 = v[3];
      s.clipped_fraction = v[13];
      s.homog_M.assign(v.begin() + 14 + ne + na, v.end());
      ds.samples.push_back(std::move(s));
    }
    PerN p;
    p.n = std::stoi(f[1]);
    p.N = std::stoi(f[2]);
    p.W_n = v[4];
    p.W_N = v[5];
    p.T = v[6];
    p.U = v[7];
    p.L = v[8];
    p.s2 = v[9];
    p.A_bar = v[10];
    p.D_next = v[11];
    p.bracket = v[12];
    p.lindeberg.assign(v.begin() + 14, v.begin() + 14 + ne);
    p.window.assign(v.begin() + 14 + ne, v.begin() + 14 + ne + na);
    ds.samples.back().per_n.push_back(std::move(p));
  }
  return ds;
}

RunResult execute_run(const ExperimentConfig& config, const fs::path& dir, const RunOptions& options) {
  config.validate();
  auto log = [&](const std::string& s) {
    if (options.log) *options.log << s << std::endl;
  };
  fs::create_directories(dir / "raw");
  fs::create_directories(dir / "cache");
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path report_path = dir / "report.json";

  json manifest;
  const json golden = golden_json(config);
  bool stale = false;
  if (fs::exists(manifest_path)) {
    try {
      manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
      throw ParameterError("corrupt manifest.json: " + std::string(e.what()));
    }
    if (!(parse_config(manifest.at("config_text").get<std::string>()) == config))
      throw ParameterError("run directory " + dir.string() + " holds a different config");
    stale = manifest.at("golden_constants") != golden;
    if (!stale && manifest.value("status", "") == "complete" && fs::exists(report_path)) {
      RunResult res;
      res.report = json::parse(read_file(report_path));
      res.complete = true;
      res.reused = true;
      res.all_pass = res.report.at("all_pass").get<bool>();
      log("run already complete; nothing recomputed");
      return res;
    }
  } else {
    manifest = {{"tool", kToolVersion},
                {"created", now_iso()},
                {"config", config_entries(config)},
                {"config_text", format_config(config)},
                {"seed_base", config.seed_base},
                {"golden_constants", golden}};
  }

  const fs::path cache_path = dir / "cache" / ("walk_d" + std::to_string(config.d) + ".json");
  const json walk_cache = walk_cache_json(config);
  if (fs::exists(cache_path)) {
    if (json::parse(read_file(cache_path)) != walk_cache) stale = true;
  } else {
    write_atomic(cache_path, walk_cache.dump(1));
  }

  manifest["status"] = "incomplete";
  manifest["stale"] = stale;
  manifest["blocks_total"] = config.blocks();
  manifest["updated"] = now_iso();
  write_atomic(manifest_path, manifest.dump(2));

  log("building exact references");
  const auto t_ref = std::chrono::steady_clock::now();
  const Reference ref = make_reference(config);
  double compute = manifest.value("compute_seconds", 0.0);
  compute += std::chrono::duration<double>(std::chrono::steady_clock::now() - t_ref).count();

  std::vector<Block> blocks;
  int fresh = 0;
  bool complete = true;
  for (int b = 0; b < config.blocks(); ++b) {
    const fs::path bp = dir / "raw" / block_name(b);
    if (fs::exists(bp)) {
      try {
        Block blk = block_from_json(json::parse(read_file(bp)));
        const auto expect = std::min(config.block_size, config.replicates - b * config.block_size);
        if (blk.index == b && static_cast<int>(blk.samples.size()) == expect) {
          blocks.push_back(std::move(blk));
          continue;
        }
      } catch (const std::exception&) {
      }
      log("recomputing unreadable " + bp.string());
    }
    if (options.max_new_blocks >= 0 && fresh >= options.max_new_blocks) {
      complete = false;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Block blk = run_block(config, ref, b, options.threads);
    write_atomic(bp, block_to_json(blk).dump());
    blocks.push_back(std::move(blk));
    ++fresh;
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    compute += sec;
    manifest["compute_seconds"] = compute;
    manifest["updated"] = now_iso();
    write_atomic(manifest_path, manifest.dump(2));
    char msg[96];
    std::snprintf(msg, sizeof msg, "block %d/%d in %.1f s", b + 1, config.blocks(), sec);
    log(msg);
  }

  const Dataset ds = merge(std::move(blocks));
  const auto tests = run_all_tests(ds, config, ref);
  bool all_pass = true;
  json jt = json::array();
  for (const auto& t : tests) {
    all_pass = all_pass && t.pass();
    jt.push_back(to_json(t));
  }
  json report = {{"status", complete ? "complete" : "incomplete"},
                 {"stale", stale},
                 {"replicates_done", ds.samples.size()},
                 {"replicates_total", config.replicates},
                 {"all_pass", all_pass},
                 {"tolerance_policy",
                  "Monte Carlo tolerances are engineering budgets based on standard errors; "
                  "the theory gives no finite-n error rates"},
                 {"references", references_json(config, ref)},
                 {"tests", jt}};
  write_atomic(dir / "samples.csv", samples_csv(ds, config));
  write_atomic(report_path, report.dump(2));
  manifest["status"] = complete ? "complete" : "incomplete";
  manifest["blocks_done"] = static_cast<int>(ds.samples.size() + config.block_size - 1) / config.block_size;
  manifest["updated"] = now_iso();
  manifest["compute_seconds"] = compute;
  manifest["threads"] = options.threads;
  write_atomic(manifest_path, manifest.dump(2));

  RunResult res;
  res.complete = complete;
  res.stale = stale;
  res.all_pass = all_pass;
  res.report = std::move(report);
  return res;
}

std::string summarize_report(const json& report, bool& failed) {
  std::ostringstream out;
  const bool complete = report.at("status").get<std::string>() == "complete";
  failed = !complete;
  out << "run: " << (complete ? "complete" : "PARTIAL") << " (" << report.at("replicates_done").get<long>() << "/"
      << report.at("replicates_total").get<long>() << " replicates)";
  if (report.value("stale", false)) out << "  [stale golden constants]";
  out << "\n\n";
  out << std::left << std::setw(26) << "test" << std::setw(46) << "check" << std::setw(6) << "n" << std::setw(14)
      << "value" << std::setw(30) << "tolerance" << "verdict\n";
  for (const auto& jt : report.at("tests")) {
    const auto t = report_from_json(jt);
    if (t.skipped && t.checks.empty()) {
      out << std::setw(26) << t.name << "skipped: " << t.reason << "\n";
      continue;
    }
    for (const auto& c : t.checks) {
      std::string verdict = !c.gating ? "info" : c.pass ? "PASS" : "FAIL";
      if (c.gating && !c.pass) failed = true;
      std::string tol = c.tolerance;
      if (std::isfinite(c.lower) || std::isfinite(c.upper)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "[%.4g, %.4g]", c.lower, c.upper);
        tol = buf;
      }
      char val[32];
      std::snprintf(val, sizeof val, "%.6g", c.value);
      out << std::setw(26) << t.name << std::setw(46) << c.name << std::setw(6) << c.n << std::setw(14) << val
          << std::setw(30) << tol << " " << verdict;
      if (c.gating && !c.pass) out << "  (" << c.tolerance << ")";
      out << "\n";
    }
    if (!t.probes.empty()) out << std::setw(26) << "" << "probes: " << t.probes << "\n";
  }
  return out.str();
}

}  // namespace polymerlab::experiments
