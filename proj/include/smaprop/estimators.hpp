// Learned self-sensing predictors: the hot/cold switching muscle-force (pose)
// model over (T, R), and contact-force models over subsets of (T, R, theta).
#pragma once

#include "smaprop/beam.hpp"
#include "smaprop/plant.hpp"
#include "smaprop/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smaprop::est {

using plant::SampleFrame;

/// Fit failures carry the partition or subset they concern.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForceSample {
  double force = 0.0;  // N, target
  double temperature = 0.0;
  double resistance = 0.0;
};

struct LabeledSet {
  std::vector<ForceSample> samples;
  std::size_t rejected = 0;
};

/// Converts bend angles to muscle-force labels through the beam model.
inline LabeledSet label_sma_force(std::span<const SampleFrame> frames, const beam::LimbParams& limb) {
  LabeledSet out;
  out.samples.reserve(frames.size());
  const double zeta = limb.zeta();
  for (const auto& f : frames) {
    if (!(f.theta >= 0.0 && f.theta <= beam::kMaxBend)) {
      ++out.rejected;
      continue;
    }
    out.samples.push_back({beam::sma_force_from_angle(f.theta, zeta), f.temperature, f.resistance});
  }
  return out;
}

struct SplitRule {
  double t_split = 100.0;  // degC
  double r_split = 1.7;    // ohm

  /// Cold iff T < T_split and R > R_split; everything else is hot.
  bool is_cold(double temp, double res) const { return temp < t_split && res > r_split; }
};

struct HotCold {
  std::vector<ForceSample> cold;
  std::vector<ForceSample> hot;
};

inline HotCold split_hot_cold(std::span<const ForceSample> data, const SplitRule& rule = {}) {
  HotCold out;
  for (const auto& s : data) (rule.is_cold(s.temperature, s.resistance) ? out.cold : out.hot).push_back(s);
  return out;
}

struct SwitchingModel {
  poly::PolyModel cold;
  poly::PolyModel hot;
  SplitRule split;
  beam::LimbParams limb;
};

namespace detail {

inline poly::PolyModel fit_partition(std::span<const ForceSample> part, std::size_t degree,
                                     const char* name) {
  if (part.empty()) throw FitError(std::string("pose model: ") + name + " partition is empty");
  std::vector<std::vector<double>> pts;
  std::vector<double> y;
  pts.reserve(part.size());
  y.reserve(part.size());
  for (const auto& s : part) {
    pts.push_back({s.temperature, s.resistance});
    y.push_back(s.force);
  }
  return poly::fit_poly(pts, y, {"T", "R"}, degree);
}

}  // namespace detail

/// Independent least-squares fits on the cold and hot partitions.
inline SwitchingModel fit_pose_model(std::span<const ForceSample> data, std::size_t degree_cold = 2,
                                     std::size_t degree_hot = 2, const SplitRule& rule = {},
                                     const beam::LimbParams& limb = {}) {
  const auto parts = split_hot_cold(data, rule);
  SwitchingModel m;
  m.cold = detail::fit_partition(parts.cold, degree_cold, "cold");
  m.hot = detail::fit_partition(parts.hot, degree_hot, "hot");
  m.split = rule;
  m.limb = limb;
  return m;
}

inline double predict_sma_force(const SwitchingModel& m, double temp, double res) {
  const double x[2] = {temp, res};
  return poly::predict(m.split.is_cold(temp, res) ? m.cold : m.hot, x);
}

/// Pose from the predicted force, clamped into the reachable range first.
inline double predict_pose(const SwitchingModel& m, double temp, double res) {
  const double f = std::clamp(predict_sma_force(m, temp, res), 0.0, m.limb.max_free_force());
  return beam::bend_from_force(f, m.limb.zeta());
}

enum class SignalSubset { r_t_theta, r_theta, t_theta };

inline const char* to_string(SignalSubset s) {
  switch (s) {
    case SignalSubset::r_t_theta: return "rttheta";
    case SignalSubset::r_theta: return "rtheta";
    case SignalSubset::t_theta: return "ttheta";
  }
  return "?";
}

inline SignalSubset parse_subset(const std::string& name) {
  if (name == "rttheta") return SignalSubset::r_t_theta;
  if (name == "rtheta") return SignalSubset::r_theta;
  if (name == "ttheta") return SignalSubset::t_theta;
  throw std::domain_error("unknown signal subset '" + name + "' (expected rttheta, rtheta or ttheta)");
}

inline std::vector<std::string> subset_vars(SignalSubset s) {
  switch (s) {
    case SignalSubset::r_t_theta: return {"T", "R", "theta"};
    case SignalSubset::r_theta: return {"R", "theta"};
    case SignalSubset::t_theta: return {"T", "theta"};
  }
  throw std::domain_error("unknown signal subset");
}

/// Model inputs for one frame, in the order of subset_vars().
inline std::vector<double> subset_inputs(SignalSubset s, const SampleFrame& f) {
  switch (s) {
    case SignalSubset::r_t_theta: return {f.temperature, f.resistance, f.theta};
    case SignalSubset::r_theta: return {f.resistance, f.theta};
    case SignalSubset::t_theta: return {f.temperature, f.theta};
  }
  throw std::domain_error("unknown signal subset");
}

/// Picks model inputs by the model's own variable names.
inline std::vector<double> named_inputs(const poly::PolyModel& m, const SampleFrame& f) {
  std::vector<double> x;
  x.reserve(m.var_names.size());
  for (const auto& v : m.var_names) {
    if (v == "T") x.push_back(f.temperature);
    else if (v == "R") x.push_back(f.resistance);
    else if (v == "theta") x.push_back(f.theta);
    else throw std::domain_error("model variable '" + v + "' is not a logged signal");
  }
  return x;
}

inline poly::PolyModel fit_contact_model(std::span<const SampleFrame> frames, SignalSubset subset,
                                         std::size_t degree = 3) {
  if (frames.empty()) throw FitError("contact model: no frames to fit");
  std::vector<std::vector<double>> pts;
  std::vector<double> y;
  pts.reserve(frames.size());
  y.reserve(frames.size());
  for (const auto& f : frames) {
    pts.push_back(subset_inputs(subset, f));
    y.push_back(f.external_force);
  }
  return poly::fit_poly(pts, y, subset_vars(subset), degree);
}

inline double predict_contact_force(const poly::PolyModel& m, const SampleFrame& f) {
  return poly::predict(m, named_inputs(m, f));
}

inline constexpr double kPercentFloor = 0.05;  // N

struct ErrorReport {
  double mean_abs_error = 0.0;  // N
  double mean_pct_error = 0.0;  // percent
  std::size_t count = 0;
  std::vector<ErrorReport> folds;
};

/// e_bar = sum |e| / (K - 1); e_p = 100 sum |e| / max(F, floor) / (K - 1).
inline ErrorReport evaluate(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw std::domain_error("evaluate: length mismatch");
  if (truth.size() < 2) throw std::domain_error("evaluate needs at least two samples");
  double abs_sum = 0.0;
  double pct_sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = std::abs(predicted[k] - truth[k]);
    abs_sum += e;
    pct_sum += e / std::max(truth[k], kPercentFloor);
  }
  const double denom = static_cast<double>(truth.size() - 1);
  return {abs_sum / denom, 100.0 * pct_sum / denom, truth.size(), {}};
}

/// Generic form: applies `predict` to every item and compares with `target`.
template <typename Item, typename PredictFn, typename TargetFn>
ErrorReport evaluate(std::span<const Item> items, PredictFn&& predict, TargetFn&& target) {
  std::vector<double> yhat;
  std::vector<double> y;
  yhat.reserve(items.size());
  y.reserve(items.size());
  for (const auto& it : items) {
    yhat.push_back(predict(it));
    y.push_back(target(it));
  }
  return evaluate(yhat, y);
}

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

/// Pooled out-of-fold report; per-fold reports are kept alongside.
struct CrossValidation {
  ErrorReport test;
  ErrorReport train;
  std::vector<double> out_of_fold;  // held-out prediction for every input row
};

namespace detail {

inline CrossValidation pool(std::vector<double> oof, std::span<const double> truth,
                            std::vector<ErrorReport> test_folds, std::vector<double> train_pred,
                            std::vector<double> train_truth, std::vector<ErrorReport> train_folds) {
  CrossValidation cv;
  cv.test = evaluate(oof, truth);
  cv.test.folds = std::move(test_folds);
  cv.train = evaluate(train_pred, train_truth);
  cv.train.folds = std::move(train_folds);
  cv.out_of_fold = std::move(oof);
  return cv;
}

}  // namespace detail

inline CrossValidation cross_validate_pose(std::span<const ForceSample> data, std::size_t folds,
                                           std::uint64_t seed, std::size_t degree_cold = 2,
                                           std::size_t degree_hot = 2, const SplitRule& rule = {},
                                           const beam::LimbParams& limb = {},
                                           poly::FoldMode mode = poly::FoldMode::shuffled) {
  std::vector<double> truth(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) truth[i] = data[i].force;
  std::vector<double> oof(data.size());
  std::vector<ErrorReport> test_folds, train_folds;
  std::vector<double> train_pred, train_truth;
  for (const auto& fold : poly::kfold_split(data.size(), folds, seed, mode)) {
    const auto train = gather(data, fold.train);
    const auto model = fit_pose_model(train, degree_cold, degree_hot, rule, limb);
    const auto predict = [&](const ForceSample& s) { return predict_sma_force(model, s.temperature, s.resistance); };
    const auto target = [](const ForceSample& s) { return s.force; };
    const auto test = gather(data, fold.test);
    test_folds.push_back(evaluate(std::span<const ForceSample>(test), predict, target));
    train_folds.push_back(evaluate(std::span<const ForceSample>(train), predict, target));
    for (auto i : fold.test) oof[i] = predict(data[i]);
    for (const auto& s : train) {
      train_pred.push_back(predict(s));
      train_truth.push_back(s.force);
    }
  }
  return detail::pool(std::move(oof), truth, std::move(test_folds), std::move(train_pred),
                      std::move(train_truth), std::move(train_folds));
}

inline CrossValidation cross_validate_contact(std::span<const SampleFrame> frames, SignalSubset subset,
                                              std::size_t degree, std::size_t folds, std::uint64_t seed,
                                              poly::FoldMode mode = poly::FoldMode::shuffled) {
  std::vector<double> truth(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) truth[i] = frames[i].external_force;
  std::vector<double> oof(frames.size());
  std::vector<ErrorReport> test_folds, train_folds;
  std::vector<double> train_pred, train_truth;
  for (const auto& fold : poly::kfold_split(frames.size(), folds, seed, mode)) {
    const auto train = gather(frames, fold.train);
    const auto model = fit_contact_model(train, subset, degree);
    const auto predict = [&](const SampleFrame& f) { return predict_contact_force(model, f); };
    const auto target = [](const SampleFrame& f) { return f.external_force; };
    const auto test = gather(frames, fold.test);
    test_folds.push_back(evaluate(std::span<const SampleFrame>(test), predict, target));
    train_folds.push_back(evaluate(std::span<const SampleFrame>(train), predict, target));
    for (auto i : fold.test) oof[i] = predict(frames[i]);
    for (const auto& f : train) {
      train_pred.push_back(predict(f));
      train_truth.push_back(f.external_force);
    }
  }
  return detail::pool(std::move(oof), truth, std::move(test_folds), std::move(train_pred),
                      std::move(train_truth), std::move(train_folds));
}

}  // namespace smaprop::est
