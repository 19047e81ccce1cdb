#pragma once

#include <cmath>
#include <string>

#include "objn/core/error.hpp"

namespace objn {

// One-cycle learning-rate schedule: cosine rise from lr_start to lr_max over
// the first pct_start of the run, then cosine anneal down to lr_final.
class OneCycle {
 public:
  OneCycle(double lr_start, double lr_max, double lr_final, long long total_steps,
           double pct_start = 0.3)
      : start_(lr_start), max_(lr_max), final_(lr_final), total_(total_steps) {
    if (!(lr_start < lr_max))
      throw ConfigError("one-cycle: lr_start " + std::to_string(lr_start) +
                        " must be below lr_max " + std::to_string(lr_max));
    if (lr_final <= 0.0 || lr_start <= 0.0) throw ConfigError("one-cycle: rates must be positive");
    if (total_steps < 1) throw ConfigError("one-cycle: need at least one step");
    if (pct_start <= 0.0 || pct_start >= 1.0)
      throw ConfigError("one-cycle: pct_start must lie in (0,1)");
    rise_ = static_cast<long long>(std::llround(pct_start * static_cast<double>(total_steps - 1)));
  }

  // lr for step indices 0..total_steps-1; clamped outside that range.
  double lr_at(long long step) const {
    if (step <= 0) return total_ == 1 ? max_ : start_;
    if (step >= total_ - 1) return total_ == 1 ? max_ : final_;
    if (step <= rise_) {
      const double s = static_cast<double>(step) / static_cast<double>(rise_);
      return max_ + (start_ - max_) * 0.5 * (1.0 + std::cos(kPi * s));
    }
    const double s =
        static_cast<double>(step - rise_) / static_cast<double>(total_ - 1 - rise_);
    return final_ + (max_ - final_) * 0.5 * (1.0 + std::cos(kPi * s));
  }

  long long total_steps() const { return total_; }
  long long rise_steps() const { return rise_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  double start_, max_, final_;
  long long total_, rise_ = 0;
};

}  // namespace objn
