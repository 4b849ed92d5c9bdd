// Run configuration: plant constants, controller gains and data-collection
// plans, loadable from a JSON key-value tree. Every key is optional; missing
// keys keep the defaults below. Unknown keys are rejected so typos surface.
#pragma once

#include "smaprop/plant.hpp"
#include "smaprop/safety.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace smaprop::config {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

enum class Scale { full, ci };

inline Scale parse_scale(const std::string& s) {
  if (s == "full") return Scale::full;
  if (s == "ci") return Scale::ci;
  throw ConfigError("unknown scale '" + s + "' (expected full or ci)");
}

/// Free-motion collection: PI babbling over random setpoints, one row per hold.
struct NoContactPlan {
  std::size_t trials = 60;
  std::size_t setpoints_per_trial = 10;
  double theta_lo_deg = 10.0;
  double theta_hi_deg = 40.0;
  std::size_t hold_ticks = 400;
  double t_max = 135.0;
};

/// Plate-contact collection over the (plate distance x temperature limit) grid.
struct ContactPlan {
  std::vector<double> plate_mm = {20.0, 30.0, 40.0, 50.0};
  std::vector<double> t_max = {85.0, 100.0, 115.0, 130.0};
  std::size_t rows_per_cell = 1500;
  std::size_t log_every = 10;  // ticks between logged rows
  double theta_lo_deg = 5.0;
  double theta_hi_deg = 45.0;
  std::size_t hold_min_ticks = 200;
  std::size_t hold_max_ticks = 600;
  std::size_t threads = 0;  // 0 = one per hardware thread, 1 = sequential

  std::size_t cells() const { return plate_mm.size() * t_max.size(); }
  std::size_t rows() const { return cells() * rows_per_cell; }
};

struct GenerationConfig {
  plant::PlantParams plant;
  safety::PiGains gains;
  double gamma = 0.9;
  double tick_s = 0.1;
  NoContactPlan nocontact;
  ContactPlan contact;

  /// Applies a scale profile to the contact plan (ci = a tenth of the rows).
  void apply_scale(Scale s) { contact.rows_per_cell = s == Scale::full ? 1500 : 150; }
};

namespace detail {

inline void check_keys(const json& j, const char* section, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("key '") + key + "': " + e.what());
    }
  }
}

}  // namespace detail

inline json to_json(const beam::LimbParams& p) {
  return {{"elastic_modulus", p.elastic_modulus}, {"width", p.width}, {"thickness", p.thickness},
          {"length", p.length}, {"moment_arm", p.moment_arm}};
}

inline void from_json(const json& j, beam::LimbParams& p) {
  detail::check_keys(j, "limb", {"elastic_modulus", "width", "thickness", "length", "moment_arm"});
  detail::read(j, "elastic_modulus", p.elastic_modulus);
  detail::read(j, "width", p.width);
  detail::read(j, "thickness", p.thickness);
  detail::read(j, "length", p.length);
  detail::read(j, "moment_arm", p.moment_arm);
}

inline json to_json(const plant::PlantParams& p) {
  return {{"a1", p.thermal.a1},
          {"a2", p.thermal.a2},
          {"a3", p.thermal.a3},
          {"m_f", p.m_f},
          {"m_s", p.m_s},
          {"a_s", p.a_s},
          {"a_f", p.a_f},
          {"r_martensite", p.r_martensite},
          {"r_austenite", p.r_austenite},
          {"r_temp_coeff", p.r_temp_coeff},
          {"f_max", p.f_max},
          {"thermoelastic_gain", p.thermoelastic_gain},
          {"limb", to_json(p.limb)},
          {"sigma_temp", p.sigma_temp},
          {"sigma_resistance", p.sigma_resistance},
          {"sigma_theta_deg", rad2deg(p.sigma_theta)},
          {"i_min", p.i_min}};
}

inline void from_json(const json& j, plant::PlantParams& p) {
  detail::check_keys(j, "plant",
                     {"a1", "a2", "a3", "m_f", "m_s", "a_s", "a_f", "r_martensite", "r_austenite",
                      "r_temp_coeff", "f_max", "thermoelastic_gain", "limb", "sigma_temp",
                      "sigma_resistance", "sigma_theta_deg", "i_min"});
  detail::read(j, "a1", p.thermal.a1);
  detail::read(j, "a2", p.thermal.a2);
  detail::read(j, "a3", p.thermal.a3);
  detail::read(j, "m_f", p.m_f);
  detail::read(j, "m_s", p.m_s);
  detail::read(j, "a_s", p.a_s);
  detail::read(j, "a_f", p.a_f);
  detail::read(j, "r_martensite", p.r_martensite);
  detail::read(j, "r_austenite", p.r_austenite);
  detail::read(j, "r_temp_coeff", p.r_temp_coeff);
  detail::read(j, "f_max", p.f_max);
  detail::read(j, "thermoelastic_gain", p.thermoelastic_gain);
  if (auto it = j.find("limb"); it != j.end()) from_json(*it, p.limb);
  detail::read(j, "sigma_temp", p.sigma_temp);
  detail::read(j, "sigma_resistance", p.sigma_resistance);
  if (auto it = j.find("sigma_theta_deg"); it != j.end()) p.sigma_theta = deg2rad(it->get<double>());
  detail::read(j, "i_min", p.i_min);
}

inline json to_json(const safety::PiGains& g) {
  return {{"kp", g.kp}, {"ki", g.ki}, {"u_floor", g.u_floor}, {"u_ceil", g.u_ceil}};
}

inline void from_json(const json& j, safety::PiGains& g) {
  detail::check_keys(j, "controller", {"kp", "ki", "u_floor", "u_ceil"});
  detail::read(j, "kp", g.kp);
  detail::read(j, "ki", g.ki);
  detail::read(j, "u_floor", g.u_floor);
  detail::read(j, "u_ceil", g.u_ceil);
}

inline json to_json(const GenerationConfig& c) {
  const auto& n = c.nocontact;
  const auto& k = c.contact;
  return {{"plant", to_json(c.plant)},
          {"controller", to_json(c.gains)},
          {"gamma", c.gamma},
          {"tick_s", c.tick_s},
          {"nocontact",
           {{"trials", n.trials},
            {"setpoints_per_trial", n.setpoints_per_trial},
            {"theta_lo_deg", n.theta_lo_deg},
            {"theta_hi_deg", n.theta_hi_deg},
            {"hold_ticks", n.hold_ticks},
            {"t_max", n.t_max}}},
          {"contact",
           {{"plate_mm", k.plate_mm},
            {"t_max", k.t_max},
            {"rows_per_cell", k.rows_per_cell},
            {"log_every", k.log_every},
            {"theta_lo_deg", k.theta_lo_deg},
            {"theta_hi_deg", k.theta_hi_deg},
            {"hold_min_ticks", k.hold_min_ticks},
            {"hold_max_ticks", k.hold_max_ticks},
            {"threads", k.threads}}}};
}

inline void from_json(const json& j, GenerationConfig& c) {
  detail::check_keys(j, "config", {"plant", "controller", "gamma", "tick_s", "nocontact", "contact"});
  if (auto it = j.find("plant"); it != j.end()) from_json(*it, c.plant);
  if (auto it = j.find("controller"); it != j.end()) from_json(*it, c.gains);
  detail::read(j, "gamma", c.gamma);
  detail::read(j, "tick_s", c.tick_s);
  if (auto it = j.find("nocontact"); it != j.end()) {
    auto& n = c.nocontact;
    detail::check_keys(*it, "nocontact",
                       {"trials", "setpoints_per_trial", "theta_lo_deg", "theta_hi_deg", "hold_ticks", "t_max"});
    detail::read(*it, "trials", n.trials);
    detail::read(*it, "setpoints_per_trial", n.setpoints_per_trial);
    detail::read(*it, "theta_lo_deg", n.theta_lo_deg);
    detail::read(*it, "theta_hi_deg", n.theta_hi_deg);
    detail::read(*it, "hold_ticks", n.hold_ticks);
    detail::read(*it, "t_max", n.t_max);
  }
  if (auto it = j.find("contact"); it != j.end()) {
    auto& k = c.contact;
    detail::check_keys(*it, "contact",
                       {"plate_mm", "t_max", "rows_per_cell", "log_every", "theta_lo_deg", "theta_hi_deg",
                        "hold_min_ticks", "hold_max_ticks", "threads"});
    detail::read(*it, "plate_mm", k.plate_mm);
    detail::read(*it, "t_max", k.t_max);
    detail::read(*it, "rows_per_cell", k.rows_per_cell);
    detail::read(*it, "log_every", k.log_every);
    detail::read(*it, "theta_lo_deg", k.theta_lo_deg);
    detail::read(*it, "theta_hi_deg", k.theta_hi_deg);
    detail::read(*it, "hold_min_ticks", k.hold_min_ticks);
    detail::read(*it, "hold_max_ticks", k.hold_max_ticks);
    detail::read(*it, "threads", k.threads);
  }
  c.plant.validate();
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(c.tick_s > 0.0)) throw ConfigError("tick_s must be > 0");
  if (c.contact.log_every == 0 || c.contact.hold_min_ticks == 0 ||
      c.contact.hold_max_ticks < c.contact.hold_min_ticks) {
    throw ConfigError("contact: need log_every > 0 and 0 < hold_min_ticks <= hold_max_ticks");
  }
  for (double d : c.contact.plate_mm) {
    if (!(d > 0.0)) throw ConfigError("contact.plate_mm entries must be > 0");
  }
}

inline GenerationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  GenerationConfig c;
  try {
    from_json(json::parse(in), c);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return c;
}

}  // namespace smaprop::config
