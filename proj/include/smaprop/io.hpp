// Artifact files: datasets on disk and the JSON documents for fitted models,
// calibrations, sweeps and error reports. Every JSON document carries a schema
// name and version; readers refuse anything else.
#pragma once

#include "smaprop/contact.hpp"
#include "smaprop/dataset.hpp"
#include "smaprop/estimators.hpp"
#include "smaprop/polynomial.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace smaprop::io {

using nlohmann::json;

inline constexpr int kDocVersion = 1;

inline constexpr const char* kPoseSchema = "smaprop.pose_model";
inline constexpr const char* kContactSchema = "smaprop.contact_model";
inline constexpr const char* kCalibrationSchema = "smaprop.calibration";
inline constexpr const char* kSweepSchema = "smaprop.sweep";
inline constexpr const char* kReportSchema = "smaprop.report";

/// Unreadable, malformed or wrong-schema artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- files ----

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline void save_dataset(const std::string& path, const data::Dataset& d) {
  std::ostringstream ss;
  data::write_dataset(ss, d);
  write_text(path, ss.str());
}

inline data::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return data::read_dataset(in);
}

/// Two-space indented JSON with a trailing newline; stable key order.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

namespace detail {

inline json envelope(const char* schema) { return {{"schema", schema}, {"version", kDocVersion}}; }

inline void check_envelope(const json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema") || !j.contains("version")) {
    throw FormatError(std::string("expected a ") + schema + " document (missing schema/version)");
  }
  if (j.at("schema") != schema) {
    throw FormatError(std::string("expected schema ") + schema + ", found " + j.at("schema").dump());
  }
  if (j.at("version") != kDocVersion) {
    throw FormatError(std::string(schema) + ": unsupported version " + j.at("version").dump());
  }
}

template <typename F>
auto guarded(const char* schema, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(schema) + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw FormatError(std::string(schema) + ": " + e.what());
  }
}

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

// ---- polynomial models ----

inline json to_json(const poly::PolyModel& m) {
  return {{"vars", m.var_names}, {"degree", m.degree}, {"monomial_order", m.monomial_order},
          {"weights", m.weights}};
}

inline poly::PolyModel poly_from_json(const json& j) {
  poly::PolyModel m;
  m.var_names = j.at("vars").get<std::vector<std::string>>();
  m.degree = j.at("degree").get<std::size_t>();
  m.monomial_order = j.at("monomial_order").get<std::string>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.validate();
  return m;
}

inline json to_json(const est::SwitchingModel& m) {
  json j = detail::envelope(kPoseSchema);
  j["split"] = {{"t_split", m.split.t_split}, {"r_split", m.split.r_split}};
  j["limb"] = config::to_json(m.limb);
  j["cold"] = to_json(m.cold);
  j["hot"] = to_json(m.hot);
  return j;
}

inline est::SwitchingModel pose_model_from_json(const json& j) {
  detail::check_envelope(j, kPoseSchema);
  return detail::guarded(kPoseSchema, [&] {
    est::SwitchingModel m;
    m.split.t_split = j.at("split").at("t_split").get<double>();
    m.split.r_split = j.at("split").at("r_split").get<double>();
    config::from_json(j.at("limb"), m.limb);
    m.cold = poly_from_json(j.at("cold"));
    m.hot = poly_from_json(j.at("hot"));
    return m;
  });
}

/// A contact-force model together with the signal subset it was fitted on.
struct ContactModel {
  est::SignalSubset subset = est::SignalSubset::r_t_theta;
  poly::PolyModel model;
};

inline json to_json(const ContactModel& c) {
  json j = detail::envelope(kContactSchema);
  j["signals"] = est::to_string(c.subset);
  j["model"] = to_json(c.model);
  return j;
}

inline ContactModel contact_model_from_json(const json& j) {
  detail::check_envelope(j, kContactSchema);
  return detail::guarded(kContactSchema, [&] {
    ContactModel c;
    c.subset = est::parse_subset(j.at("signals").get<std::string>());
    c.model = poly_from_json(j.at("model"));
    if (c.model.var_names != est::subset_vars(c.subset)) {
      throw FormatError(std::string(kContactSchema) + ": variables do not match signals '" +
                        est::to_string(c.subset) + "'");
    }
    return c;
  });
}

// ---- reports ----

inline json report_body(const est::ErrorReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back(report_body(f));
  return {{"mean_abs_error_N", r.mean_abs_error}, {"mean_pct_error", r.mean_pct_error}, {"count", r.count},
          {"folds", folds}};
}

inline est::ErrorReport report_from_body(const json& j) {
  est::ErrorReport r;
  r.mean_abs_error = j.at("mean_abs_error_N").get<double>();
  r.mean_pct_error = j.at("mean_pct_error").get<double>();
  r.count = j.at("count").get<std::size_t>();
  for (const auto& f : j.at("folds")) r.folds.push_back(report_from_body(f));
  return r;
}

/// A named evaluation: held-out and training error for one model kind.
struct Report {
  std::string target;  // pose | contact
  std::string signals; // empty for pose
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  est::ErrorReport test;
  est::ErrorReport train;
};

inline json to_json(const Report& r) {
  json j = detail::envelope(kReportSchema);
  j["target"] = r.target;
  j["signals"] = r.signals;
  j["folds"] = r.folds;
  j["seed"] = r.seed;
  j["test"] = report_body(r.test);
  j["train"] = report_body(r.train);
  return j;
}

inline Report report_from_json(const json& j) {
  detail::check_envelope(j, kReportSchema);
  return detail::guarded(kReportSchema, [&] {
    Report r;
    r.target = j.at("target").get<std::string>();
    r.signals = j.at("signals").get<std::string>();
    r.folds = j.at("folds").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.test = report_from_body(j.at("test"));
    r.train = report_from_body(j.at("train"));
    return r;
  });
}

// ---- calibration and sweep ----

inline json to_json(const contact::ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline contact::ConfusionCounts counts_from_json(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
          j.at("tn").get<std::size_t>()};
}

inline json to_json(const contact::Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline contact::Metrics metrics_from_json(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

inline json to_json(const contact::ErrorRow& r) {
  return {{"t_max_degC", r.t_max}, {"signals", est::to_string(r.subset)}, {"count", r.count},
          {"mean_abs_error_N", r.mean_abs_error}};
}

inline contact::ErrorRow error_row_from_json(const json& j) {
  return {j.at("t_max_degC").get<double>(), est::parse_subset(j.at("signals").get<std::string>()),
          j.at("count").get<std::size_t>(), j.at("mean_abs_error_N").get<double>()};
}

inline json to_json(const contact::CalibrationResult& c) {
  json j = detail::envelope(kCalibrationSchema);
  j["threshold_N"] = c.threshold;
  j["criterion"] = contact::to_string(c.criterion);
  j["best"] = to_json(c.best);
  json curve = json::array();
  for (const auto& p : c.curve) {
    curve.push_back({{"threshold_N", p.threshold}, {"counts", to_json(p.counts)}, {"metrics", to_json(p.metrics)}});
  }
  j["curve"] = curve;
  j["t_max_operational_degC"] = detail::opt(c.t_max_operational);
  json table = json::array();
  for (const auto& r : c.error_table) table.push_back(to_json(r));
  j["error_table"] = table;
  return j;
}

inline contact::CalibrationResult calibration_from_json(const json& j) {
  detail::check_envelope(j, kCalibrationSchema);
  return detail::guarded(kCalibrationSchema, [&] {
    contact::CalibrationResult c;
    c.threshold = j.at("threshold_N").get<double>();
    c.criterion = contact::parse_criterion(j.at("criterion").get<std::string>());
    c.best = metrics_from_json(j.at("best"));
    for (const auto& p : j.at("curve")) {
      c.curve.push_back({p.at("threshold_N").get<double>(), counts_from_json(p.at("counts")),
                         metrics_from_json(p.at("metrics"))});
    }
    c.t_max_operational = detail::opt_double(j.at("t_max_operational_degC"));
    for (const auto& r : j.at("error_table")) c.error_table.push_back(error_row_from_json(r));
    return c;
  });
}

inline json to_json(const contact::SweepResult& s) {
  json j = detail::envelope(kSweepSchema);
  json rows = json::array();
  for (const auto& r : s.rows) rows.push_back(to_json(r));
  j["rows"] = rows;
  j["skipped_degC"] = s.skipped;
  j["operational_limit_degC"] = detail::opt(s.operational_limit);
  return j;
}

inline contact::SweepResult sweep_from_json(const json& j) {
  detail::check_envelope(j, kSweepSchema);
  return detail::guarded(kSweepSchema, [&] {
    contact::SweepResult s;
    for (const auto& r : j.at("rows")) s.rows.push_back(error_row_from_json(r));
    s.skipped = j.at("skipped_degC").get<std::vector<double>>();
    s.operational_limit = detail::opt_double(j.at("operational_limit_degC"));
    return s;
  });
}

/// Plot-ready text: one line per threshold.
inline std::string curve_table(const contact::CalibrationResult& c) {
  std::ostringstream ss;
  ss << "threshold_N,precision,recall,f1,tp,fp,fn,tn\n";
  for (const auto& p : c.curve) {
    ss << data::format_double(p.threshold) << ',' << data::format_double(p.metrics.precision) << ','
       << data::format_double(p.metrics.recall) << ',' << data::format_double(p.metrics.f1) << ','
       << p.counts.tp << ',' << p.counts.fp << ',' << p.counts.fn << ',' << p.counts.tn << '\n';
  }
  return ss.str();
}

// ---- convenience loaders ----

inline est::SwitchingModel load_pose_model(const std::string& path) {
  return pose_model_from_json(parse_json(read_text(path), path));
}

inline ContactModel load_contact_model(const std::string& path) {
  return contact_model_from_json(parse_json(read_text(path), path));
}

inline contact::CalibrationResult load_calibration(const std::string& path) {
  return calibration_from_json(parse_json(read_text(path), path));
}

}  // namespace smaprop::io
