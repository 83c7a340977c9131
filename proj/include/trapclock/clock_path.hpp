#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "trapclock/errors.hpp"

namespace trapclock {

enum class ClockKind { Discrete, Continuous };

// Nondecreasing clock S over internal time, stored as cumulative values at
// breakpoints.
//
// Discrete clocks are cadlag step functions: S(v) = values[i] for the largest
// breakpoint <= v. Continuous clocks accumulate tau(x) * ds while J sits at x,
// so between breakpoints they are linear and the stored values are exact at
// the breakpoints.
class ClockPath {
 public:
  ClockPath() = default;
  ClockPath(std::vector<double> breakpoints, std::vector<double> values, ClockKind kind)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)), kind_(kind) {
    require(!breakpoints_.empty() && breakpoints_.size() == values_.size(),
            "ClockPath: breakpoints/values size mismatch");
    require(values_.front() >= 0.0, "ClockPath: negative initial value");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      require(breakpoints_[i] > breakpoints_[i - 1], "ClockPath: breakpoints not increasing");
      require(values_[i] >= values_[i - 1], "ClockPath: values decreasing");
    }
  }

  ClockKind kind() const noexcept { return kind_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return breakpoints_.size(); }

  // Last internal time covered by the path.
  double horizon() const { return breakpoints_.back(); }
  double final_value() const { return values_.back(); }

  double value_at(double v) const {
    if (v < breakpoints_.front()) return values_.front();
    if (v > horizon()) {
      throw RangeExhausted("ClockPath: internal time " + std::to_string(v) +
                           " beyond horizon " + std::to_string(horizon()));
    }
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    if (kind_ == ClockKind::Discrete || i + 1 == breakpoints_.size()) return values_[i];
    const double w = (v - breakpoints_[i]) / (breakpoints_[i + 1] - breakpoints_[i]);
    return values_[i] + w * (values_[i + 1] - values_[i]);
  }

  // Generalized right-continuous inverse inf{v : S(v) > s}.
  double inverse(double s) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), s);
    if (it == values_.end()) {
      throw RangeExhausted("ClockPath: level " + std::to_string(s) +
                           " not exceeded before final value " + std::to_string(final_value()));
    }
    const std::size_t i = static_cast<std::size_t>(it - values_.begin());
    if (i == 0 || kind_ == ClockKind::Discrete) return breakpoints_[i];
    const double w = (s - values_[i - 1]) / (values_[i] - values_[i - 1]);
    return breakpoints_[i - 1] + w * (breakpoints_[i] - breakpoints_[i - 1]);
  }

 private:
  std::vector<double> breakpoints_{0.0};
  std::vector<double> values_{0.0};
  ClockKind kind_ = ClockKind::Continuous;
};

inline double inverse_clock(const ClockPath& clock, double s) { return clock.inverse(s); }

}  // namespace trapclock
