// Phenomenological single-wire SMA limb: affine thermal dynamics, cosine
// phase kinetics with hysteresis, resistance, muscle force and beam statics,
// plus the noisy measurement path (R = V / i from the supply readings).
#pragma once

#include "smaprop/beam.hpp"
#include "smaprop/safety.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace smaprop::plant {

inline constexpr double kAmbient = 22.0;  // degC, reference for the resistance temperature term

struct PlantParams {
  safety::ThermalModel thermal;

  // Transformation temperatures, degC. M_f < M_s <= A_s < A_f.
  double m_f = 50.0;
  double m_s = 65.0;
  double a_s = 70.0;
  double a_f = 95.0;

  double r_martensite = 2.2;   // ohm
  double r_austenite = 1.5;    // ohm
  double r_temp_coeff = 0.002; // ohm/degC

  double f_max = 2.0;              // N, muscle force when fully austenitic at A_f
  double thermoelastic_gain = 0.4;  // N/degC of extra force above A_f, scaled by xi

  beam::LimbParams limb;

  double sigma_temp = 0.5;                              // degC
  double sigma_resistance = 0.01;                       // ohm
  double sigma_theta = 0.2 * std::numbers::pi / 180.0;  // rad
  double i_min = 0.2;                                   // A

  void validate() const {
    if (!(thermal.a1 > 0.0 && thermal.a1 < 1.0)) throw std::domain_error("PlantParams: a1 must lie in (0, 1)");
    if (!(thermal.a2 > 0.0)) throw std::domain_error("PlantParams: a2 must be > 0");
    if (!(m_f < m_s && m_s <= a_s && a_s < a_f)) {
      throw std::domain_error("PlantParams: need M_f < M_s <= A_s < A_f");
    }
    if (!(r_martensite > r_austenite && r_austenite > 0.0)) {
      throw std::domain_error("PlantParams: need R_M > R_A > 0");
    }
    if (!(f_max > 0.0) || thermoelastic_gain < 0.0) throw std::domain_error("PlantParams: bad force law");
    if (sigma_temp < 0.0 || sigma_resistance < 0.0 || sigma_theta < 0.0 || i_min < 0.0) {
      throw std::domain_error("PlantParams: noise and current floor must be non-negative");
    }
    limb.validate();
  }
};

inline double thermal_step(double temp, double volts, const PlantParams& p) {
  return p.thermal.step(temp, volts);
}

/// Major heating curve: 0 below A_s, 1 above A_f, cosine in between.
inline double heating_fraction(double temp, const PlantParams& p) {
  if (temp <= p.a_s) return 0.0;
  if (temp >= p.a_f) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (p.a_f - temp) / (p.a_f - p.a_s)));
}

/// Major cooling curve: 1 above M_s, 0 below M_f, cosine in between.
inline double cooling_fraction(double temp, const PlantParams& p) {
  if (temp >= p.m_s) return 1.0;
  if (temp <= p.m_f) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (p.m_s - temp) / (p.m_s - p.m_f)));
}

enum class Direction { heating, cooling };

struct PhaseState {
  double xi = 0.0;       // austenite fraction
  double xi_rev = 0.0;   // fraction at the last heating/cooling reversal
  Direction direction = Direction::heating;
};

/// Advances the austenite fraction for a move from `temp` to `next_temp`.
///
/// The fraction is held inside the envelope of the two major curves: heating
/// can only raise it up to the heating curve, cooling can only lower it down to
/// the cooling curve. Reversals inside the envelope trace flat minor loops.
inline PhaseState phase_update(const PhaseState& s, double temp, double next_temp,
                               const PlantParams& p) {
  PhaseState out = s;
  if (next_temp > temp && s.direction == Direction::cooling) {
    out.direction = Direction::heating;
    out.xi_rev = s.xi;
  } else if (next_temp < temp && s.direction == Direction::heating) {
    out.direction = Direction::cooling;
    out.xi_rev = s.xi;
  }
  const double lower = heating_fraction(next_temp, p);
  const double upper = cooling_fraction(next_temp, p);
  out.xi = std::clamp(s.xi, lower, upper);
  return out;
}

inline double resistance_model(double temp, double xi, const PlantParams& p) {
  return (1.0 - xi) * p.r_martensite + xi * p.r_austenite + p.r_temp_coeff * (temp - kAmbient);
}

/// Muscle force: proportional to the austenite fraction, with a thermoelastic
/// rise above A_f.
inline double muscle_force(double temp, double xi, const PlantParams& p) {
  return xi * (p.f_max + p.thermoelastic_gain * std::max(0.0, temp - p.a_f));
}

struct PlantState {
  double temperature = kAmbient;
  PhaseState phase;
  double theta = 0.0;
  double displacement = 0.0;
  double muscle_force = 0.0;
  double external_force = 0.0;
  double resistance = 0.0;
  bool in_contact = false;
};

/// One logged timestep.
struct SampleFrame {
  std::uint64_t k = 0;
  double t_s = 0.0;
  double volts = 0.0;
  double amps = 0.0;
  double resistance = 0.0;   // ohm, V/i plus measurement noise
  double temperature = 0.0;  // degC, thermocouple reading
  double theta = 0.0;        // rad, bend sensor reading
  double external_force = 0.0;  // N, ground truth
  bool contact = false;

  bool operator==(const SampleFrame&) const = default;
};

/// External loading for one step.
struct Loading {
  std::optional<double> plate_dist;  // mm
  double tip_load = 0.0;             // N, pushes against the bend
};

class Plant {
 public:
  explicit Plant(PlantParams params, std::uint64_t seed, double initial_temp = kAmbient)
      : params_(std::move(params)), rng_(seed) {
    params_.validate();
    state_.temperature = initial_temp;
    state_.phase.xi = heating_fraction(initial_temp, params_);
    resolve({});
  }

  const PlantParams& params() const { return params_; }
  const PlantState& state() const { return state_; }

  /// Lowest input that keeps the sense current at or above i_min.
  double input_floor() const { return params_.i_min * state_.resistance; }

  /// Applies the saturated, floored input for one tick and returns the measurement.
  SampleFrame step(double u_nom, const safety::SafetyParams& safety, const Loading& load) {
    const double u_safe = safety::apply_supervisor(std::max(0.0, u_nom), state_.temperature, safety);
    const double u = std::max(u_safe, input_floor());

    const double next_temp = thermal_step(state_.temperature, u, params_);
    state_.phase = phase_update(state_.phase, state_.temperature, next_temp, params_);
    state_.temperature = next_temp;
    resolve(load);

    SampleFrame f;
    f.volts = u;
    f.amps = u / state_.resistance;
    f.resistance = f.volts / f.amps + noise(params_.sigma_resistance);
    f.temperature = state_.temperature + noise(params_.sigma_temp);
    f.theta = std::clamp(state_.theta + noise(params_.sigma_theta), 0.0, beam::kMaxBend);
    f.external_force = state_.external_force;
    f.contact = state_.in_contact;
    return f;
  }

  /// Re-solves statics under a new load without advancing time.
  void apply_load(const Loading& load) { resolve(load); }

 private:
  void resolve(const Loading& load) {
    state_.muscle_force = muscle_force(state_.temperature, state_.phase.xi, params_);
    const auto st = beam::loaded_statics(state_.muscle_force, load.plate_dist, load.tip_load, params_.limb);
    state_.theta = st.theta;
    state_.displacement = st.displacement;
    state_.external_force = st.external_force;
    state_.in_contact = st.external_force > 0.0;
    state_.resistance = resistance_model(state_.temperature, state_.phase.xi, params_);
  }

  double noise(double sigma) {
    if (sigma == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng_);
  }

  PlantParams params_;
  PlantState state_;
  std::mt19937_64 rng_;
};

/// Plant, supervisor and PI babbler stepped together at a fixed tick.
class ClosedLoop {
 public:
  ClosedLoop(PlantParams params, safety::SafetyParams safety, safety::Babbler babbler,
             double tick_s, std::uint64_t seed)
      : plant_(std::move(params), seed), safety_(safety), babbler_(std::move(babbler)), tick_(tick_s) {
    if (!(tick_s > 0.0)) throw std::domain_error("tick must be > 0");
    safety_.model = plant_.params().thermal;
  }

  SampleFrame tick(const Loading& load) {
    const double u_nom = babbler_.step(last_theta_, tick_);
    SampleFrame f = plant_.step(u_nom, safety_, load);
    f.k = k_;
    f.t_s = static_cast<double>(k_ + 1) * tick_;
    ++k_;
    last_theta_ = f.theta;
    return f;
  }

  const Plant& plant() const { return plant_; }
  Plant& plant() { return plant_; }
  safety::Babbler& babbler() { return babbler_; }
  const safety::Babbler& babbler() const { return babbler_; }
  const safety::SafetyParams& safety() const { return safety_; }
  std::uint64_t ticks() const { return k_; }
  double tick_s() const { return tick_; }

 private:
  Plant plant_;
  safety::SafetyParams safety_;
  safety::Babbler babbler_;
  double tick_;
  std::uint64_t k_ = 0;
  double last_theta_ = 0.0;
};

}  // namespace smaprop::plant
