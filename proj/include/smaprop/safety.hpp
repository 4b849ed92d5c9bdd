// Supervisory input saturation for the affine SMA thermal model, plus the PI
// "motor babbling" generator used to collect training data.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace smaprop::safety {

/// T_{k+1} = a1 T_k + a2 u_k + a3
struct ThermalModel {
  double a1 = 0.99;
  double a2 = 1.38 / 9.0;  // a 9 V hold settles near 160 degC
  double a3 = 0.22;        // u = 0 equilibrium at 22 degC

  double step(double temp, double volts) const { return a1 * temp + a2 * volts + a3; }
  double equilibrium(double volts) const { return (a2 * volts + a3) / (1.0 - a1); }
};

inline double adjusted_max_temp(double t_max, double gamma, double a1, double a3) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("discount gamma must lie in (0, 1]");
  const double r = (1.0 - gamma) / gamma;
  return (1.0 / gamma - a1 * r) * t_max - a3 * r;
}

struct SafetyParams {
  ThermalModel model;
  double t_max = 135.0;
  double gamma = 0.9;

  double t_max_adj() const { return adjusted_max_temp(t_max, gamma, model.a1, model.a3); }
};

/// u* = (T_adj - a1 T - a3) / a2; negative once the wire is too hot.
inline double saturation_limit(double temp, const SafetyParams& p) {
  if (!(p.model.a2 > 0.0)) throw std::domain_error("thermal input gain a2 must be > 0");
  return (p.t_max_adj() - p.model.a1 * temp - p.model.a3) / p.model.a2;
}

/// u = max(0, min(u_nom, gamma u*)). Keeps T <= T_max for any u_nom >= 0 when
/// the plant matches the model and T_max is at or above ambient.
inline double apply_supervisor(double u_nom, double temp, const SafetyParams& p) {
  return std::max(0.0, std::min(u_nom, p.gamma * saturation_limit(temp, p)));
}

struct Setpoint {
  double theta = 0.0;     // rad
  std::size_t hold = 0;   // ticks
};

using Schedule = std::vector<Setpoint>;

inline Schedule random_setpoint_schedule(std::size_t n, double theta_lo, double theta_hi,
                                         std::size_t hold, std::uint64_t seed) {
  if (!(theta_lo < theta_hi)) throw std::domain_error("setpoint bounds must satisfy lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(theta_lo, theta_hi);
  Schedule s(n);
  for (auto& sp : s) sp = {dist(rng), hold};
  return s;
}

struct PiGains {
  double kp = 6.0;        // V/rad
  double ki = 0.6;        // V/(rad s)
  double u_floor = 0.5;   // V, keeps the sense current above i_min
  double u_ceil = 9.0;    // V
};

/// PI tracking of a setpoint schedule with a clamped integrator.
class Babbler {
 public:
  explicit Babbler(Schedule schedule, PiGains gains = {})
      : schedule_(std::move(schedule)), gains_(gains) {}

  double setpoint() const { return override_ ? *override_ : current().theta; }
  double integral() const { return integral_; }
  std::size_t position() const { return position_; }
  bool finished() const { return !override_ && position_ >= schedule_.size(); }
  const PiGains& gains() const { return gains_; }

  /// Pins the target, ignoring the schedule, until cleared.
  void hold_setpoint(double theta) { override_ = theta; }

  void reset() {
    integral_ = 0.0;
    position_ = 0;
    elapsed_ = 0;
  }

  /// One control tick; returns the nominal voltage and advances the schedule.
  double step(double theta_meas, double dt) {
    const double err = setpoint() - theta_meas;
    const double i_max = gains_.ki > 0.0 ? gains_.u_ceil / gains_.ki : 0.0;
    integral_ = std::clamp(integral_ + err * dt, 0.0, i_max);
    const double u = std::clamp(gains_.kp * err + gains_.ki * integral_, gains_.u_floor, gains_.u_ceil);
    if (!override_ && position_ < schedule_.size() && ++elapsed_ >= schedule_[position_].hold) {
      ++position_;
      elapsed_ = 0;
    }
    return u;
  }

  /// True on the tick that ends the current hold (before step advances it).
  bool hold_ending() const {
    return !override_ && position_ < schedule_.size() && elapsed_ + 1 >= schedule_[position_].hold;
  }

 private:
  const Setpoint& current() const {
    static const Setpoint rest{};
    if (schedule_.empty()) return rest;
    return schedule_[std::min(position_, schedule_.size() - 1)];
  }

  Schedule schedule_;
  PiGains gains_;
  double integral_ = 0.0;
  std::size_t position_ = 0;
  std::size_t elapsed_ = 0;
  std::optional<double> override_;
};

}  // namespace smaprop::safety
