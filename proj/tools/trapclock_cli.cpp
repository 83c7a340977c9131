// trapclock: batch front end for the trap-model toolkit.
//
//   trapclock simulate   --config cfg.json --out DIR
//   trapclock conditions --config cfg.json --out DIR
//   trapclock overshoot  --config cfg.json --out DIR
//   trapclock aging      --config cfg.json --out DIR
//
// Exit codes: 0 success, 2 invalid configuration, 3 runtime cap exceeded,
// 1 anything else.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trapclock/aging.hpp"
#include "trapclock/chains.hpp"
#include "trapclock/clock.hpp"
#include "trapclock/estimators.hpp"
#include "trapclock/io.hpp"
#include "trapclock/limits.hpp"
#include "trapclock/parallel.hpp"
#include "trapclock/stats.hpp"

#ifndef TRAPCLOCK_BUILD_ID
#define TRAPCLOCK_BUILD_ID "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace trapclock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitCap = 3;

// ---------------------------------------------------------------------------
// Configuration access. Every key read is copied into `resolved` with its
// default filled in; keys that are never read are rejected.

class Section {
 public:
  Section(const json& src, std::string path, json& resolved)
      : src_(src), path_(std::move(path)), out_(resolved) {
    if (!src_.is_null() && !src_.is_object()) fail("", "must be an object");
    if (!out_.is_object()) out_ = json::object();
  }

  double number(const char* key, double def) {
    const json* v = find(key);
    double x = def;
    if (v) {
      if (!v->is_number()) fail(key, "must be a number");
      x = v->get<double>();
    }
    if (!std::isfinite(x)) fail(key, "must be finite");
    out_[key] = x;
    return x;
  }

  std::uint64_t count(const char* key, std::uint64_t def) {
    const json* v = find(key);
    std::uint64_t x = def;
    if (v) x = as_count(*v, key);
    out_[key] = x;
    return x;
  }

  std::string text(const char* key, const std::string& def, std::initializer_list<const char*> allowed) {
    const json* v = find(key);
    std::string x = def;
    if (v) {
      if (!v->is_string()) fail(key, "must be a string");
      x = v->get<std::string>();
    }
    bool ok = allowed.size() == 0;
    for (const char* a : allowed) ok |= x == a;
    if (!ok) fail(key, "unsupported value '" + x + "'");
    out_[key] = x;
    return x;
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& def) {
    const json* v = find(key);
    std::vector<double> x = def;
    if (v) {
      x.clear();
      if (v->is_number()) {
        x.push_back(v->get<double>());
      } else if (v->is_array()) {
        for (const auto& e : *v) {
          if (!e.is_number()) fail(key, "must be a list of numbers");
          x.push_back(e.get<double>());
        }
      } else {
        fail(key, "must be a number or a list of numbers");
      }
    }
    for (double e : x)
      if (!std::isfinite(e)) fail(key, "entries must be finite");
    out_[key] = x;
    return x;
  }

  std::vector<std::uint64_t> counts(const char* key) {
    const json* v = find(key);
    std::vector<std::uint64_t> x;
    if (!v) return x;
    if (!v->is_array()) fail(key, "must be a list of integers");
    for (const auto& e : *v) x.push_back(as_count(e, key));
    out_[key] = x;
    return x;
  }

  bool has(const char* key) const { return src_.is_object() && src_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json kNull;
    const json& s = has(key) ? src_.at(key) : kNull;
    return Section(s, path_ + key + ".", out_[key]);
  }

  void finish() const {
    if (!src_.is_object()) return;
    for (const auto& [k, v] : src_.items()) {
      if (!seen_.count(k)) fail(k.c_str(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError(path_ + key + ": " + what);
  }

  void require(bool ok, const char* key, const std::string& what) const {
    if (!ok) fail(key, what);
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!src_.is_object() || !src_.contains(key)) return nullptr;
    return &src_.at(key);
  }

  std::uint64_t as_count(const json& v, const char* key) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) fail(key, "must be nonnegative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    fail(key, "must be a nonnegative integer");
  }

  const json& src_;
  std::string path_;
  json& out_;
  std::set<std::string> seen_;
};

// Settings shared by every command.
struct Common {
  EnvConfig env;
  ScaleOptions scales;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> env_seeds;
  unsigned workers = 1;
  fs::path out;

  std::uint64_t env_seed(std::uint64_t i) const {
    return i < env_seeds.size() ? env_seeds[i] : derive(master_seed, i);
  }
};

Common read_common(Section& root) {
  Common c;
  auto env = root.sub("env");
  c.env.d = static_cast<int>(env.count("d", 2));
  c.env.alpha = env.number("alpha", 0.5);
  c.env.theta = env.number("theta", 0.0);
  c.env.c_bar = env.number("c_bar", 1.0);
  env.finish();
  c.env.validate();
  if (c.env.d > 4) env.fail("d", "lattice dimension must be 1, 2, 3 or 4");

  auto sc = root.sub("scales");
  c.scales.gamma2 = sc.number("gamma2", c.scales.gamma2);
  c.scales.gamma3 = sc.number("gamma3", c.scales.gamma3);
  c.scales.policy = sc.text("theta_policy", "desk", {"desk", "theorem"}) == "desk"
                        ? ThetaPolicy::Desk
                        : ThetaPolicy::Theorem;
  sc.require(c.scales.gamma2 > 0.0, "gamma2", "must be positive");
  sc.finish();

  auto seeds = root.sub("seeds");
  c.master_seed = seeds.count("master", 0);
  c.env_seeds = seeds.counts("env_seeds");
  seeds.finish();

  const auto w = root.count("workers", 1);
  root.require(w >= 1 && w <= 1024, "workers", "must lie in [1, 1024]");
  c.workers = static_cast<unsigned>(w);
  c.out = root.text("output", "trapclock_out", {});
  root.require(!c.out.empty(), "output", "must not be empty");
  return c;
}

ChainKind read_chain(Section& run) {
  return run.text("chain", "vsrw", {"vsrw", "discrete"}) == "vsrw" ? ChainKind::ContinuousVsrw
                                                                   : ChainKind::DiscreteJ;
}

template <class F>
decltype(auto) with_lattice(int d, F&& f) {
  switch (d) {
    case 1: return f(std::integral_constant<int, 1>{});
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    default: return f(std::integral_constant<int, 4>{});
  }
}

// ---------------------------------------------------------------------------
// Output bookkeeping.

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;
  std::uint64_t events = 0;

  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void write_manifest(const Outputs& out, const std::string& command, const json& config, double seconds) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["build"] = {{"id", TRAPCLOCK_BUILD_ID}, {"compiler", __VERSION__}};
  json files = json::array();
  for (const auto& f : out.files) {
    const auto p = out.dir / f;
    files.push_back({{"file", f}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  m["files"] = files;
  m["totals"] = {{"wall_seconds", seconds}, {"events", out.events}};
  std::ofstream o(out.dir / "manifest.json", std::ios::binary);
  o << m.dump(2) << '\n';
}

std::string numbered(const std::string& stem, std::uint64_t i, std::uint64_t n) {
  if (n == 1) return stem + ".csv";
  const int width = static_cast<int>(std::to_string(n - 1).size());
  std::string idx = std::to_string(i);
  return stem + "_" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0') +
         idx + ".csv";
}

// ---------------------------------------------------------------------------
// Commands. Each one parses and validates the whole configuration into a plan
// before it simulates anything.

using Runner = std::function<void(Outputs&)>;

Runner plan_simulate(Section& root, const Common& c) {
  auto run = root.sub("run");
  const ChainKind kind = read_chain(run);
  const double n = run.number("n", 1e4);
  const double t = run.number("t", 1.0);
  run.require(n >= 3.0, "n", "must be >= 3");
  run.require(t > 0.0, "t", "must be positive");
  const ScaleSet scales = ScaleSet::batm(std::floor(n), c.env.d, c.env.alpha, c.scales);
  const double needed = static_cast<double>(scales.k_n(t)) * scales.theta_n;
  const double horizon = run.number("horizon", std::max(1.0, scales.internal_span(t)));
  run.require(horizon > 0.0, "horizon", "must be positive");
  run.require(horizon >= needed, "horizon",
              "must cover theta_n k_n(t) = " + format_double(needed) + " for the block series");
  if (kind == ChainKind::DiscreteJ) {
    run.require(std::floor(horizon) == horizon, "horizon", "must be an integer step count for the discrete chain");
  }
  const auto n_traj = run.count("n_traj", 1);
  run.require(n_traj >= 1, "n_traj", "must be positive");
  const auto max_jumps = run.count("max_jumps", 20'000'000);
  run.require(max_jumps >= 1, "max_jumps", "must be positive");
  run.finish();

  return [=](Outputs& out) {
    with_lattice(c.env.d, [&](auto dim) {
      constexpr int D = decltype(dim)::value;
      EnvConfig e = c.env;
      e.env_seed = c.env_seed(0);
      const LatticeEnv<D> env(e);
      struct Item {
        Trajectory<LatticeEnv<D>> traj;
        ClockPath clock;
        BlockSeries blocks;
      };
      std::vector<Item> items(n_traj);
      deterministic_reduce(
          n_traj, c.workers, 0,
          [&](int&, std::size_t j) {
            TrajectoryConfig<Site<D>> tc;
            tc.traj_seed = derive(e.env_seed, j);
            tc.chain_kind = kind;
            tc.horizon = horizon;
            tc.max_jumps = max_jumps;
            auto& it = items[j];
            it.traj = run_chain(env, tc);
            it.clock = build_clock(env, it.traj);
            it.blocks = block_series(it.clock, scales, t);
          },
          [](int&, const int&) {}, 1);
      for (std::uint64_t j = 0; j < n_traj; ++j) {
        write_trajectory_csv(out.add(numbered("trajectory", j, n_traj)), items[j].traj);
        write_clock_csv(out.add(numbered("clock", j, n_traj)), items[j].clock);
        write_blocks_csv(out.add(numbered("blocks", j, n_traj)), items[j].blocks);
        out.events += items[j].traj.jumps.size();
      }
    });
  };
}

Runner plan_conditions(Section& root, const Common& c) {
  auto run = root.sub("run");
  EstimatorOptions base;
  base.kind = read_chain(run);
  base.mode = run.text("mode", "quenched", {"quenched", "annealed"}) == "quenched" ? EnvMode::Quenched
                                                                                  : EnvMode::Annealed;
  base.workers = c.workers;
  const auto ns = run.numbers("n", {1e4});
  const double t = run.number("t", 1.0);
  const auto us = run.numbers("u", {0.25, 0.5, 1.0, 2.0, 4.0});
  const auto eps = run.numbers("eps", {});
  const auto n_traj = run.count("n_traj", 1000);
  const auto n_env = run.count("n_env", c.env_seeds.empty() ? 1 : c.env_seeds.size());
  run.require(!ns.empty(), "n", "must not be empty");
  run.require(t > 0.0, "t", "must be positive");
  run.require(!us.empty() || !eps.empty(), "u", "u and eps grids are both empty");
  for (double u : us) run.require(u > 0.0, "u", "entries must be positive");
  for (double e : eps) run.require(e > 0.0, "eps", "entries must be positive");
  run.require(n_traj >= 1, "n_traj", "must be positive");
  run.require(n_env >= 1, "n_env", "must be positive");
  std::vector<ScaleSet> scales;
  for (double n : ns) {
    run.require(n >= 3.0, "n", "entries must be >= 3");
    scales.push_back(ScaleSet::batm(std::floor(n), c.env.d, c.env.alpha, c.scales));
    run.require(scales.back().k_n(t) >= 2, "n",
                "k_n(t) < 2 at n = " + format_double(n) + ": no blocks to average");
  }
  run.finish();

  return [=](Outputs& out) {
    std::vector<EstimateRow> rows;
    CsvWriter slopes(out.add("slopes.csv"),
                     {"n", "t", "env_seed", "mode", "slope", "intercept", "slope_se", "n_points"});
    with_lattice(c.env.d, [&](auto dim) {
      constexpr int D = decltype(dim)::value;
      for (const auto& sc : scales) {
        for (std::uint64_t i = 0; i < n_env; ++i) {
          EnvConfig e = c.env;
          e.env_seed = c.env_seed(i);
          const LatticeEnv<D> env(e);
          EstimatorOptions opt = base;
          opt.seed = derive(e.env_seed, 0);
          const auto sw = estimate_conditions(env, sc, Site<D>{}, t, us, eps, n_traj, opt);
          for (const auto& group : {sw.nu, sw.sigma, sw.m})
            for (const auto& est : group) rows.push_back({est, e.env_seed, opt.mode});
          out.events += n_traj;

          std::vector<double> x, y;
          for (const auto& est : sw.nu) {
            if (est.value > 0.0) {
              x.push_back(est.u);
              y.push_back(est.value);
            }
          }
          LinearFit fit{std::nan(""), std::nan(""), std::nan("")};
          if (x.size() >= 2) fit = loglog_fit(x, y);
          slopes.row(sc.n, t, e.env_seed, to_string(opt.mode), fit.slope, fit.intercept, fit.slope_se,
                     static_cast<std::uint64_t>(x.size()));
        }
      }
    });
    write_estimates_csv(out.add("estimates.csv"), rows);
  };
}

Runner plan_overshoot(Section& root, const Common& c) {
  auto run = root.sub("run");
  const auto alphas = run.numbers("alpha", {c.env.alpha});
  const auto rhos = run.numbers("rho", {0.5, 1.0, 3.0});
  const double level = run.number("level", 1.0);
  const auto n_paths = run.count("n_paths", 10000);
  SubordinatorOptions so;
  so.cutoff = run.number("cutoff", so.cutoff);
  so.small_jumps = run.text("small_jumps", "compensate", {"compensate", "drop"}) == "compensate"
                       ? SmallJumps::Compensate
                       : SmallJumps::Drop;
  run.require(!alphas.empty(), "alpha", "must not be empty");
  for (double a : alphas) run.require(a > 0.0 && a < 1.0, "alpha", "entries must lie in (0,1)");
  run.require(!rhos.empty(), "rho", "must not be empty");
  for (double r : rhos) run.require(r > 0.0, "rho", "entries must be positive");
  run.require(level > 0.0, "level", "must be positive");
  run.require(n_paths >= 1, "n_paths", "must be positive");
  run.require(so.cutoff > 0.0 && so.cutoff < level, "cutoff", "must lie in (0, level)");

  // Optional single sample paths.
  std::optional<double> path_horizon;
  if (run.has("path")) {
    auto p = run.sub("path");
    path_horizon = p.number("horizon", 1.0);
    p.require(*path_horizon > 0.0, "horizon", "must be positive");
    p.finish();
  }
  std::optional<std::pair<int, std::vector<double>>> fk;
  if (run.has("fk")) {
    auto f = run.sub("fk");
    const auto d = f.count("d", 2);
    f.require(d >= 1 && d <= 64, "d", "must lie in [1, 64]");
    const auto grid = f.numbers("grid", {0.25, 0.5, 1.0, 2.0, 4.0});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      f.require(grid[i] >= 0.0 && (i == 0 || grid[i] >= grid[i - 1]), "grid",
                "must be nonnegative and nondecreasing");
    }
    f.finish();
    fk.emplace(static_cast<int>(d), grid);
  }
  run.finish();

  return [=](Outputs& out) {
    CsvWriter table(out.add("overshoot.csv"),
                    {"alpha", "rho", "level", "n_paths", "empirical", "std_error", "arcsine_target"});
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const std::uint64_t base = derive(c.master_seed, a);
      // Overshoots of the level; rho * level is the window for ratio rho.
      auto hits = deterministic_reduce(
          n_paths, c.workers, std::vector<std::uint64_t>(rhos.size(), 0),
          [&](std::vector<std::uint64_t>& h, std::size_t i) {
            SubordinatorStream st(alphas[a], so, derive(base, i));
            const double chi = first_passage(st, level).overshoot();
            for (std::size_t r = 0; r < rhos.size(); ++r) h[r] += chi >= rhos[r] * level;
          },
          [](std::vector<std::uint64_t>& x, const std::vector<std::uint64_t>& y) {
            for (std::size_t r = 0; r < x.size(); ++r) x[r] += y[r];
          });
      for (std::size_t r = 0; r < rhos.size(); ++r) {
        const double p = static_cast<double>(hits[r]) / static_cast<double>(n_paths);
        table.row(alphas[a], rhos[r], level, n_paths, p, binomial_se(p, static_cast<double>(n_paths)),
                  arcsine_target(alphas[a], rhos[r]));
      }
      out.events += n_paths;
    }
    if (path_horizon) {
      const auto p = sample_subordinator(alphas.front(), *path_horizon, derive(c.master_seed, alphas.size()), so);
      write_subordinator_csv(out.add("subordinator.csv"), p);
    }
    if (fk) {
      const auto s = sample_fk(alphas.front(), fk->first, fk->second,
                               derive(c.master_seed, alphas.size() + 1), so);
      write_fk_csv(out.add("fk.csv"), s);
    }
  };
}

Runner plan_aging(Section& root, const Common& c) {
  auto run = root.sub("run");
  AgingConfig cfg;
  cfg.env = c.env;
  cfg.master_seed = c.master_seed;
  cfg.workers = c.workers;
  cfg.scale_options = c.scales;
  const auto ages = run.numbers("s", {1e3});
  cfg.rhos = run.numbers("rho", {0.5, 1.0, 3.0});
  cfg.eps = run.numbers("eps", {});
  cfg.n_env = run.count("n_env", 200);
  cfg.n_traj = run.count("n_traj", 50);
  cfg.c2_radius = run.number("c2_radius", -1.0);
  cfg.max_jumps = run.count("max_jumps", 1'000'000'000);
  root.require(c.env_seeds.empty(), "seeds", "aging derives env seeds from seeds.master; env_seeds is not used");
  run.require(!ages.empty(), "s", "must not be empty");
  for (double s : ages) run.require(s >= 3.0, "s", "entries must be >= 3");

  std::optional<FkAgingConfig> fk;
  std::vector<double> fk_eps;
  if (run.has("fk")) {
    auto f = run.sub("fk");
    FkAgingConfig k;
    k.alpha = f.number("alpha", c.env.alpha);
    k.d = static_cast<int>(f.count("d", static_cast<std::uint64_t>(c.env.d)));
    k.n_samples = f.count("n_samples", 10000);
    k.max_level = static_cast<int>(f.count("max_level", static_cast<std::uint64_t>(k.max_level)));
    k.seed = derive(c.master_seed, 0xF0F0F0F0ULL);
    k.workers = c.workers;
    fk_eps = f.numbers("eps", {0.05, 0.02});
    f.require(!fk_eps.empty(), "eps", "must not be empty");
    for (double e : fk_eps) f.require(e > 0.0, "eps", "entries must be positive");
    f.finish();
    k.validate();
    fk = k;
  }
  run.finish();
  cfg.validate();

  return [=](Outputs& out) {
    std::vector<AgingPoint> points;
    std::vector<EnvAgingRow> rows;
    std::uint64_t excluded = 0;
    for (double s : ages) {
      const auto r = run_batm_aging(cfg, s);
      points.insert(points.end(), r.points.begin(), r.points.end());
      rows.insert(rows.end(), r.per_env.begin(), r.per_env.end());
      out.events += r.total_jumps;
      excluded += r.excluded;
    }
    if (fk) {
      for (double rho : cfg.rhos) {
        const auto v = estimate_Ceps_fk(*fk, rho, fk_eps);
        points.insert(points.end(), v.begin(), v.end());
        out.events += fk->n_samples;
      }
    }
    write_aging_csv(out.add("aging.csv"), points);
    write_aging_env_csv(out.add("aging_env.csv"), rows);
    if (excluded > 0) {
      std::cerr << "aging: " << excluded << " trajectories exceeded max_jumps and were excluded\n";
    }
  };
}

struct Overrides {
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> master_seed;
  std::optional<double> alpha, theta;
  std::optional<int> d;
  std::optional<double> n, t, horizon;
  std::optional<std::uint64_t> n_traj, n_env, n_paths, max_jumps;
};

void apply_overrides(json& cfg, const Overrides& o) {
  if (!cfg.is_object()) throw ValidationError("configuration must be a JSON object");
  if (o.out) cfg["output"] = *o.out;
  if (o.workers) cfg["workers"] = *o.workers;
  if (o.master_seed) cfg["seeds"]["master"] = *o.master_seed;
  if (o.alpha) cfg["env"]["alpha"] = *o.alpha;
  if (o.theta) cfg["env"]["theta"] = *o.theta;
  if (o.d) cfg["env"]["d"] = *o.d;
  if (o.n) cfg["run"]["n"] = *o.n;
  if (o.t) cfg["run"]["t"] = *o.t;
  if (o.horizon) cfg["run"]["horizon"] = *o.horizon;
  if (o.n_traj) cfg["run"]["n_traj"] = *o.n_traj;
  if (o.n_env) cfg["run"]["n_env"] = *o.n_env;
  if (o.n_paths) cfg["run"]["n_paths"] = *o.n_paths;
  if (o.max_jumps) cfg["run"]["max_jumps"] = *o.max_jumps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trapclock: clock processes of trap models in random environments"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides ov;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", ov.out, "Output directory");
    sub->add_option("--workers", ov.workers, "Worker threads");
    sub->add_option("--master-seed", ov.master_seed, "Master seed");
    sub->add_option("--alpha", ov.alpha, "Trap tail exponent");
    sub->add_option("--theta", ov.theta, "Asymmetry parameter");
    sub->add_option("--d", ov.d, "Lattice dimension");
  };
  auto* sim = app.add_subcommand("simulate", "Trajectory, clock and block-series dumps");
  auto* cond = app.add_subcommand("conditions", "Convergence-condition estimators");
  auto* over = app.add_subcommand("overshoot", "Subordinator overshoots against the arcsine law");
  auto* aging = app.add_subcommand("aging", "Aging correlation functions");
  for (auto* s : {sim, cond, over, aging}) add_common(s);
  sim->add_option("--n", ov.n, "Scale parameter n");
  sim->add_option("--t", ov.t, "Macroscopic time t");
  sim->add_option("--horizon", ov.horizon, "Internal-time horizon");
  sim->add_option("--n-traj", ov.n_traj, "Trajectories");
  sim->add_option("--max-jumps", ov.max_jumps, "Jump cap per trajectory");
  cond->add_option("--t", ov.t, "Macroscopic time t");
  cond->add_option("--n-traj", ov.n_traj, "Samples per estimate");
  cond->add_option("--n-env", ov.n_env, "Environments");
  over->add_option("--n-paths", ov.n_paths, "Subordinator paths per alpha");
  aging->add_option("--n-env", ov.n_env, "Environments");
  aging->add_option("--n-traj", ov.n_traj, "Trajectories per environment");
  aging->add_option("--max-jumps", ov.max_jumps, "Jump cap per trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        cfg = json::parse(in, nullptr, true, true);
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
      }
    }
    apply_overrides(cfg, ov);

    json resolved = json::object();
    Section root(cfg, "", resolved);
    const Common common = read_common(root);
    Runner runner;
    if (command == "simulate") runner = plan_simulate(root, common);
    if (command == "conditions") runner = plan_conditions(root, common);
    if (command == "overshoot") runner = plan_overshoot(root, common);
    if (command == "aging") runner = plan_aging(root, common);
    root.finish();

    Outputs out;
    out.dir = common.out;
    fs::create_directories(out.dir);
    runner(out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out, command, resolved, secs);
    std::cout << command << ": wrote " << out.files.size() << " CSV files and manifest.json to "
              << out.dir.string() << '\n';
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const CapExceeded& e) {
    std::cerr << "runtime cap exceeded: " << e.what() << '\n';
    return kExitCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
