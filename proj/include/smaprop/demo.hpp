// Human-contact demonstration loop: the simulated limb held at a setpoint,
// a human push applied as a tip load, and the estimator chain driving a
// three-level contact LED. Also the headless replay used for testing.
#pragma once

#include "smaprop/config.hpp"
#include "smaprop/contact.hpp"
#include "smaprop/dataset.hpp"
#include "smaprop/estimators.hpp"
#include "smaprop/io.hpp"
#include "smaprop/plant.hpp"

#include <json.hpp>

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smaprop::demo {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

struct DemoConfig {
  double contact_threshold = 0.1;  // N, green/blue boundary
  double high_threshold = 0.5;     // N, blue/red boundary
  double setpoint_deg = 20.0;
  double t_max = 135.0;            // degC
  std::optional<double> plate_mm;
  std::uint64_t seed = 1;
};

struct DemoState {
  std::uint64_t tick = 0;
  double theta_hat = 0.0;   // rad, from the pose model
  double theta_true = 0.0;  // rad
  double theta_meas = 0.0;  // rad, bend sensor
  double force_hat = 0.0;   // N, estimated external force
  contact::Level led = contact::Level::none;
  double temperature = 0.0;  // degC, measured
  double resistance = 0.0;   // ohm, measured
  double setpoint = 0.0;     // rad
  double human_force = 0.0;  // N

  bool operator==(const DemoState&) const = default;
};

inline json to_json(const DemoState& s) {
  return {{"type", "state"},
          {"version", kProtocolVersion},
          {"tick", s.tick},
          {"theta_hat_rad", s.theta_hat},
          {"theta_true_rad", s.theta_true},
          {"theta_meas_rad", s.theta_meas},
          {"force_hat_N", s.force_hat},
          {"led", contact::led_color(s.led)},
          {"T_degC", s.temperature},
          {"R_ohm", s.resistance},
          {"setpoint_rad", s.setpoint},
          {"human_force_N", s.human_force}};
}

/// Models the loop runs with.
struct ModelSet {
  est::SwitchingModel pose;
  io::ContactModel contact;
};

/// Fits both estimators on freshly simulated data (CI-scale contact grid).
inline ModelSet train_models(config::GenerationConfig cfg, std::uint64_t seed) {
  cfg.apply_scale(config::Scale::ci);
  const auto free = data::generate_nocontact_dataset(cfg, data::derive_seed(seed, 1));
  const auto labeled = est::label_sma_force(free.rows, cfg.plant.limb);
  ModelSet m;
  m.pose = est::fit_pose_model(labeled.samples, 2, 2, {}, cfg.plant.limb);
  const auto contact = data::generate_contact_dataset(cfg, data::derive_seed(seed, 2));
  m.contact = {est::SignalSubset::r_t_theta, est::fit_contact_model(contact.rows, est::SignalSubset::r_t_theta, 3)};
  return m;
}

/// Reply to a client command.
struct Reply {
  bool ok = true;
  std::string verb;
  std::string message;

  json to_json() const {
    json j = {{"type", ok ? "ack" : "error"}, {"version", kProtocolVersion}, {"command", verb}};
    if (!ok) j["message"] = message;
    return j;
  }
};

class DemoLoop {
 public:
  DemoLoop(config::GenerationConfig cfg, ModelSet models, DemoConfig demo)
      : cfg_(std::move(cfg)), models_(std::move(models)), demo_(demo), loop_(make_loop()) {
    if (!(demo_.contact_threshold < demo_.high_threshold)) {
      throw std::domain_error("demo thresholds must satisfy contact < high");
    }
    setpoint_ = config::deg2rad(demo_.setpoint_deg);
    loop_.babbler().hold_setpoint(setpoint_);
  }

  const DemoState& state() const { return state_; }
  const DemoConfig& settings() const { return demo_; }

  /// Validates and applies one command; malformed commands leave state unchanged.
  Reply handle_command(const json& msg) {
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      return {false, "", "command must be an object with a string 'type'"};
    }
    const std::string verb = msg["type"];
    auto number = [&](const char* key) -> std::optional<double> {
      if (!msg.contains(key) || !msg[key].is_number()) return std::nullopt;
      return msg[key].get<double>();
    };
    if (verb == "set_force") {
      const auto f = number("force_N");
      if (!f || !(*f >= 0.0)) return {false, verb, "set_force needs force_N >= 0"};
      human_force_ = *f;
      return {true, verb, ""};
    }
    if (verb == "set_setpoint") {
      const auto d = number("theta_deg");
      if (!d || !(*d >= 0.0 && *d <= 45.0)) return {false, verb, "set_setpoint needs theta_deg in [0, 45]"};
      setpoint_ = config::deg2rad(*d);
      loop_.babbler().hold_setpoint(setpoint_);
      return {true, verb, ""};
    }
    if (verb == "reset") {
      loop_ = make_loop();
      human_force_ = 0.0;
      setpoint_ = config::deg2rad(demo_.setpoint_deg);
      loop_.babbler().hold_setpoint(setpoint_);
      state_ = {};
      return {true, verb, ""};
    }
    return {false, verb, "unknown command '" + verb + "'"};
  }

  /// Advances the plant one tick and runs the estimator chain.
  const DemoState& tick() {
    const plant::Loading load{demo_.plate_mm, human_force_};
    const auto f = loop_.tick(load);
    DemoState s;
    s.tick = f.k;
    s.theta_true = loop_.plant().state().theta;
    s.theta_meas = f.theta;
    s.temperature = f.temperature;
    s.resistance = f.resistance;
    s.theta_hat = est::predict_pose(models_.pose, f.temperature, f.resistance);
    s.force_hat = est::predict_contact_force(models_.contact.model, f);
    s.led = contact::classify3(s.force_hat, demo_.contact_threshold, demo_.high_threshold);
    s.setpoint = setpoint_;
    s.human_force = human_force_;
    state_ = s;
    return state_;
  }

 private:
  plant::ClosedLoop make_loop() const {
    safety::SafetyParams sp{cfg_.plant.thermal, demo_.t_max, cfg_.gamma};
    return plant::ClosedLoop(cfg_.plant, sp, safety::Babbler({}, cfg_.gains), cfg_.tick_s, demo_.seed);
  }

  config::GenerationConfig cfg_;
  ModelSet models_;
  DemoConfig demo_;
  plant::ClosedLoop loop_;
  double setpoint_ = 0.0;
  double human_force_ = 0.0;
  DemoState state_;
};

/// One scripted command: applied just before tick `at` runs.
struct ScriptEntry {
  std::uint64_t at = 0;
  json command;
};

/// Script lines are `<tick> <json command>`; blank lines and '#' comments are skipped.
inline std::vector<ScriptEntry> parse_script(std::istream& in) {
  std::vector<ScriptEntry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line.substr(first));
    ScriptEntry e;
    if (!(ss >> e.at)) throw data::ParseError(n, "script line must start with a tick number");
    std::string rest;
    std::getline(ss, rest);
    try {
      e.command = json::parse(rest);
    } catch (const json::parse_error& err) {
      throw data::ParseError(n, std::string("bad command JSON: ") + err.what());
    }
    if (!out.empty() && e.at < out.back().at) throw data::ParseError(n, "script ticks must not decrease");
    out.push_back(std::move(e));
  }
  return out;
}

/// Runs `ticks` ticks with scripted commands; returns every state in order.
/// Rejected commands are collected in `errors` when given.
inline std::vector<DemoState> replay(DemoLoop& loop, const std::vector<ScriptEntry>& script, std::uint64_t ticks,
                                     std::vector<std::string>* errors = nullptr) {
  std::vector<DemoState> out;
  out.reserve(ticks);
  std::size_t next = 0;
  for (std::uint64_t t = 0; t < ticks; ++t) {
    while (next < script.size() && script[next].at <= t) {
      const auto r = loop.handle_command(script[next].command);
      if (!r.ok && errors) errors->push_back("tick " + std::to_string(t) + ": " + r.message);
      ++next;
    }
    out.push_back(loop.tick());
  }
  return out;
}

/// One JSON object per line.
inline void write_state_log(std::ostream& out, const std::vector<DemoState>& states) {
  for (const auto& s : states) out << to_json(s).dump() << '\n';
}

}  // namespace smaprop::demo
