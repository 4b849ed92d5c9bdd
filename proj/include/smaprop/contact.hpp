// Threshold contact classification, its calibration, and the temperature-limit
// sweep that finds where resistance stops substituting for temperature.
#pragma once

#include "smaprop/estimators.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smaprop::contact {

inline bool classify(double force_hat, double threshold) { return force_hat > threshold; }

enum class Level { none, contact, high };

inline const char* led_color(Level l) {
  switch (l) {
    case Level::none: return "green";
    case Level::contact: return "blue";
    case Level::high: return "red";
  }
  return "?";
}

inline Level classify3(double force_hat, double t_lo, double t_hi) {
  if (!(t_lo < t_hi)) throw std::domain_error("classify3 needs t_lo < t_hi");
  if (force_hat <= t_lo) return Level::none;
  if (force_hat <= t_hi) return Level::contact;
  return Level::high;
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

template <typename PredRange, typename TruthRange>
ConfusionCounts confusion(const PredRange& predictions, const TruthRange& truth) {
  if (std::size(predictions) != std::size(truth)) throw std::domain_error("confusion: length mismatch");
  ConfusionCounts c;
  auto t = std::begin(truth);
  for (bool p : predictions) {
    const bool y = *t++;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Ratios with 0/0 taken as 0.
inline Metrics precision_recall_f1(const ConfusionCounts& c) {
  Metrics m;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

enum class Criterion { f1, precision };

inline const char* to_string(Criterion c) { return c == Criterion::f1 ? "f1" : "precision"; }

inline Criterion parse_criterion(const std::string& s) {
  if (s == "f1") return Criterion::f1;
  if (s == "precision") return Criterion::precision;
  throw std::domain_error("unknown calibration criterion '" + s + "'");
}

inline double criterion_value(const Metrics& m, Criterion c) {
  return c == Criterion::f1 ? m.f1 : m.precision;
}

struct CurvePoint {
  double threshold = 0.0;
  ConfusionCounts counts;
  Metrics metrics;
};

struct ErrorRow {
  double t_max = 0.0;
  est::SignalSubset subset = est::SignalSubset::r_t_theta;
  std::size_t count = 0;
  double mean_abs_error = 0.0;
};

struct CalibrationResult {
  double threshold = 0.0;  // F*_thresh, N
  Criterion criterion = Criterion::f1;
  Metrics best;
  std::vector<CurvePoint> curve;
  std::optional<double> t_max_operational;  // degC
  std::vector<ErrorRow> error_table;
};

/// 0 to 0.2 N in 0.005 N steps.
inline std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back(0.005 * i);
  return g;
}

/// Sweeps the grid and keeps the argmax of the criterion; ties go to the larger
/// threshold.
inline CalibrationResult calibrate_threshold(std::span<const double> scores, const std::vector<bool>& truth,
                                             std::span<const double> grid, Criterion criterion = Criterion::f1) {
  if (grid.empty()) throw std::domain_error("calibrate_threshold: empty threshold grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < grid[i - 1]) throw std::domain_error("calibrate_threshold: grid must be sorted");
  }
  if (scores.size() != truth.size()) throw std::domain_error("calibrate_threshold: length mismatch");

  CalibrationResult r;
  r.criterion = criterion;
  double best = -1.0;
  std::vector<bool> pred(scores.size());
  for (double th : grid) {
    for (std::size_t k = 0; k < scores.size(); ++k) pred[k] = classify(scores[k], th);
    CurvePoint p{th, confusion(pred, truth), {}};
    p.metrics = precision_recall_f1(p.counts);
    const double v = criterion_value(p.metrics, criterion);
    if (v >= best) {
      best = v;
      r.threshold = th;
      r.best = p.metrics;
    }
    r.curve.push_back(p);
  }
  return r;
}

struct SweepConfig {
  double t_lo = 60.0;
  double t_hi = 130.0;
  double t_step = 5.0;
  std::size_t degree = 3;
  std::size_t folds = 3;
  std::uint64_t seed = 1;
  double divergence_ratio = 1.5;
  // Buckets with fewer in-contact rows carry no usable contact-force signal;
  // their error ratio is noise over noise, so they are skipped like empty ones.
  std::size_t min_contact_rows = 20;
  std::vector<est::SignalSubset> subsets = {est::SignalSubset::r_t_theta, est::SignalSubset::r_theta,
                                            est::SignalSubset::t_theta};
};

struct SweepResult {
  std::vector<ErrorRow> rows;
  std::vector<double> skipped;  // T_max values with too few rows (or contact rows) to compare
  std::optional<double> operational_limit;

  std::optional<double> error(double t_max, est::SignalSubset s) const {
    for (const auto& r : rows) {
      if (r.t_max == t_max && r.subset == s) return r.mean_abs_error;
    }
    return std::nullopt;
  }
};

/// Rows with measured temperature in [0, T_max].
inline std::vector<plant::SampleFrame> filter_tmax(std::span<const plant::SampleFrame> frames, double t_max) {
  std::vector<plant::SampleFrame> out;
  for (const auto& f : frames) {
    if (f.temperature >= 0.0 && f.temperature <= t_max) out.push_back(f);
  }
  return out;
}

/// Cross-validated contact-force error per (T_max, subset).
///
/// The operational limit is the largest swept T_max with
/// e({R,theta}) <= ratio * e({T,theta}).
inline SweepResult sweep_tmax(std::span<const plant::SampleFrame> frames, const SweepConfig& cfg = {}) {
  if (!(cfg.t_step > 0.0) || cfg.t_hi < cfg.t_lo) throw std::domain_error("sweep_tmax: bad temperature range");
  SweepResult out;
  const auto steps = static_cast<int>(std::floor((cfg.t_hi - cfg.t_lo) / cfg.t_step + 1e-9));
  double max_temp = -1e300;
  for (const auto& f : frames) max_temp = std::max(max_temp, f.temperature);

  for (int i = 0; i <= steps; ++i) {
    const double t_max = cfg.t_lo + cfg.t_step * i;
    const auto subset = filter_tmax(frames, t_max);
    const auto contacts = static_cast<std::size_t>(
        std::count_if(subset.begin(), subset.end(), [](const plant::SampleFrame& f) { return f.contact; }));
    if (subset.size() < std::max<std::size_t>(cfg.folds, 2) * 2 || contacts < cfg.min_contact_rows) {
      out.skipped.push_back(t_max);
      continue;
    }
    for (auto s : cfg.subsets) {
      const auto cv = est::cross_validate_contact(subset, s, cfg.degree, cfg.folds, cfg.seed);
      out.rows.push_back({t_max, s, subset.size(), cv.test.mean_abs_error});
    }
    const auto er = out.error(t_max, est::SignalSubset::r_theta);
    const auto et = out.error(t_max, est::SignalSubset::t_theta);
    if (er && et && *er <= cfg.divergence_ratio * *et) out.operational_limit = t_max;
    // Later buckets repeat the same rows once the data runs out.
    if (t_max >= max_temp) break;
  }
  return out;
}

}  // namespace smaprop::contact
