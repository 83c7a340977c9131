#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "trapclock/aging.hpp"
#include "trapclock/chains.hpp"
#include "trapclock/clock.hpp"
#include "trapclock/clock_path.hpp"
#include "trapclock/errors.hpp"
#include "trapclock/estimators.hpp"
#include "trapclock/limits.hpp"

namespace trapclock {

// Shortest round-trip decimal form; identical on every run and platform.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string format_field(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "1" : "0";
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_double(static_cast<double>(v));
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else {
    return std::string(std::string_view(v));
  }
}

// Site coordinates joined by ';' so a site stays one CSV field.
template <class Site>
std::string format_site(const Site& x) {
  if constexpr (std::is_integral_v<Site>) {
    return std::to_string(x);
  } else {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) s += ';';
      s += std::to_string(x[i]);
    }
    return s;
  }
}

// CSV file with a fixed header. Rows must match the header width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : path_(path), width_(header.size()), out_(path, std::ios::binary) {
    if (!out_) throw ContractViolation("cannot open " + path.string() + " for writing");
    line(header);
  }

  template <class... Fields>
  void row(const Fields&... f) {
    line(std::vector<std::string>{format_field(f)...});
  }

  void line(const std::vector<std::string>& fields) {
    require(fields.size() == width_, "CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
    ++rows_;
  }

  std::size_t rows() const noexcept { return rows_ - 1; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t width_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

template <class Env>
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory<Env>& traj) {
  CsvWriter w(path, {"jump_index", "time", "from_coords", "to_coords", "holding"});
  for (std::size_t i = 0; i < traj.jumps.size(); ++i) {
    const auto& j = traj.jumps[i];
    w.row(static_cast<std::uint64_t>(i), j.time, format_site(j.from), format_site(j.to), j.holding);
  }
}

inline void write_clock_csv(const std::filesystem::path& path, const ClockPath& clock) {
  CsvWriter w(path, {"internal_time", "clock_value"});
  for (std::size_t i = 0; i < clock.size(); ++i) w.row(clock.breakpoints()[i], clock.values()[i]);
}

// Row k = 0 holds Z_0.
inline void write_blocks_csv(const std::filesystem::path& path, const BlockSeries& series) {
  CsvWriter w(path, {"k", "Z_k"});
  w.row(std::uint64_t{0}, series.z0);
  for (std::size_t k = 0; k < series.z.size(); ++k) w.row(static_cast<std::uint64_t>(k + 1), series.z[k]);
}

struct EstimateRow {
  ConditionEstimate estimate;
  std::uint64_t env_seed = 0;
  EnvMode mode = EnvMode::Quenched;
};

inline void write_estimates_csv(const std::filesystem::path& path, const std::vector<EstimateRow>& rows) {
  CsvWriter w(path, {"name", "n", "t", "u_or_eps", "value", "std_error", "n_samples", "env_seed", "mode"});
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    const double level = e.name == EstimateName::M_eps ? e.eps : e.u;
    w.row(to_string(e.name), e.n, e.t, level, e.value, e.std_error, e.n_samples, r.env_seed,
          to_string(r.mode));
  }
}

inline void write_aging_csv(const std::filesystem::path& path, const std::vector<AgingPoint>& points) {
  CsvWriter w(path, {"kind", "s", "rho", "eps", "estimate", "std_error", "arcsine_target", "n_env",
                     "n_traj", "excluded"});
  for (const auto& p : points) {
    w.row(to_string(p.kind), p.s, p.rho, p.eps, p.estimate, p.std_error, p.arcsine_target, p.n_env,
          p.n_traj_per_env, p.excluded);
  }
}

inline void write_aging_env_csv(const std::filesystem::path& path, const std::vector<EnvAgingRow>& rows) {
  CsvWriter w(path, {"kind", "s", "rho", "eps", "env_index", "env_seed", "estimate", "n_traj", "excluded"});
  for (const auto& r : rows) {
    w.row(to_string(r.kind), r.s, r.rho, r.eps, r.env_index, r.env_seed, r.estimate, r.n_traj, r.excluded);
  }
}

// V at 0, at every jump (value after the jump) and at the horizon.
inline void write_subordinator_csv(const std::filesystem::path& path, const SubordinatorPath& p) {
  CsvWriter w(path, {"t", "value"});
  w.row(0.0, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.jump_times.size(); ++i) {
    sum += p.jump_sizes[i];
    w.row(p.jump_times[i], sum + p.slope() * p.jump_times[i]);
  }
  w.row(p.horizon, sum + p.slope() * p.horizon);
}

inline void write_fk_csv(const std::filesystem::path& path, const FKSample& s) {
  std::vector<std::string> header{"t"};
  for (int c = 1; c <= s.d; ++c) header.push_back("x_" + std::to_string(c));
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    std::vector<std::string> f{format_double(s.times[i])};
    for (double x : s.positions[i]) f.push_back(format_double(x));
    w.line(f);
  }
}

}  // namespace trapclock
