#include "smaprop/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

using namespace smaprop;
using io::json;

namespace {

poly::PolyModel random_model(std::vector<std::string> vars, std::size_t degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1e3);
  poly::PolyModel m{std::move(vars), degree, {}, poly::kMonomialOrder};
  m.weights.resize(poly::count_monomials(m.n_vars(), degree));
  for (auto& w : m.weights) w = g(rng) / 7.0;
  return m;
}

// Serialize to text and back, as the files on disk do.
json through_text(const json& j) { return io::parse_json(io::dump(j), "test"); }

void expect_same(const poly::PolyModel& a, const poly::PolyModel& b) {
  EXPECT_EQ(a.var_names, b.var_names);
  EXPECT_EQ(a.degree, b.degree);
  EXPECT_EQ(a.monomial_order, b.monomial_order);
  EXPECT_EQ(a.weights, b.weights);  // bitwise
}

}  // namespace

TEST(PoseModelFile, RoundTripIsExact) {
  est::SwitchingModel m;
  m.cold = random_model({"T", "R"}, 2, 1);
  m.hot = random_model({"T", "R"}, 1, 2);
  m.split = {98.5, 1.65};
  m.limb.length = 110.0;
  const auto back = io::pose_model_from_json(through_text(io::to_json(m)));
  expect_same(back.cold, m.cold);
  expect_same(back.hot, m.hot);
  EXPECT_EQ(back.split.t_split, 98.5);
  EXPECT_EQ(back.split.r_split, 1.65);
  EXPECT_EQ(back.limb.length, 110.0);
  EXPECT_EQ(io::dump(io::to_json(back)), io::dump(io::to_json(m)));
}

TEST(PoseModelFile, RejectsWrongSchemaVersionAndShape) {
  est::SwitchingModel m;
  m.cold = random_model({"T", "R"}, 2, 1);
  m.hot = random_model({"T", "R"}, 2, 2);
  auto j = io::to_json(m);

  auto v2 = j;
  v2["version"] = 2;
  EXPECT_THROW(io::pose_model_from_json(v2), io::FormatError);

  auto other = j;
  other["schema"] = "smaprop.contact_model";
  EXPECT_THROW(io::pose_model_from_json(other), io::FormatError);

  auto short_w = j;
  short_w["cold"]["weights"].erase(0);
  EXPECT_THROW(io::pose_model_from_json(short_w), io::FormatError);

  auto order = j;
  order["hot"]["monomial_order"] = "lex";
  EXPECT_THROW(io::pose_model_from_json(order), io::FormatError);

  auto missing = j;
  missing.erase("split");
  EXPECT_THROW(io::pose_model_from_json(missing), io::FormatError);

  EXPECT_THROW(io::pose_model_from_json(json::array()), io::FormatError);
  EXPECT_THROW(io::parse_json("{not json", "x"), io::FormatError);
}

TEST(ContactModelFile, RoundTripAndSubsetCheck) {
  io::ContactModel c{est::SignalSubset::r_theta, random_model({"R", "theta"}, 3, 3)};
  const auto back = io::contact_model_from_json(through_text(io::to_json(c)));
  EXPECT_EQ(back.subset, c.subset);
  expect_same(back.model, c.model);

  auto j = io::to_json(c);
  j["signals"] = "ttheta";
  EXPECT_THROW(io::contact_model_from_json(j), io::FormatError);
  j["signals"] = "bogus";
  EXPECT_THROW(io::contact_model_from_json(j), io::FormatError);
}

TEST(ReportFile, RoundTripKeepsFolds) {
  io::Report r;
  r.target = "contact";
  r.signals = "rttheta";
  r.folds = 3;
  r.seed = 99;
  r.test = {0.0123, 4.5, 2400, {{0.01, 4.0, 800, {}}, {0.014, 5.0, 800, {}}}};
  r.train = {0.011, 4.1, 4800, {}};
  const auto back = io::report_from_json(through_text(io::to_json(r)));
  EXPECT_EQ(io::to_json(back), io::to_json(r));
  ASSERT_EQ(back.test.folds.size(), 2u);
  EXPECT_EQ(back.test.folds[1].mean_abs_error, 0.014);
}

TEST(CalibrationFile, RoundTrip) {
  contact::CalibrationResult c;
  c.threshold = 0.035;
  c.criterion = contact::Criterion::precision;
  c.best = {0.9, 0.7, 0.7875};
  c.curve = {{0.0, {5, 5, 0, 0}, {0.5, 1.0, 2.0 / 3.0}}, {0.035, {4, 0, 1, 5}, {1.0, 0.8, 8.0 / 9.0}}};
  c.error_table = {{90.0, est::SignalSubset::t_theta, 1200, 0.004}};
  auto back = io::calibration_from_json(through_text(io::to_json(c)));
  EXPECT_EQ(io::to_json(back), io::to_json(c));
  EXPECT_FALSE(back.t_max_operational);

  c.t_max_operational = 95.0;
  back = io::calibration_from_json(through_text(io::to_json(c)));
  EXPECT_EQ(back.t_max_operational, 95.0);

  const auto csv = io::curve_table(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold_N,precision,recall,f1,tp,fp,fn,tn");
  EXPECT_NE(csv.find("\n0.035,1,0.8,"), std::string::npos);

  auto bad = io::to_json(c);
  bad["criterion"] = "accuracy";
  EXPECT_THROW(io::calibration_from_json(bad), io::FormatError);
}

TEST(SweepFile, RoundTrip) {
  contact::SweepResult s;
  s.rows = {{60.0, est::SignalSubset::r_t_theta, 300, 0.002}, {60.0, est::SignalSubset::r_theta, 300, 0.003}};
  s.skipped = {65.0};
  s.operational_limit = 60.0;
  const auto back = io::sweep_from_json(through_text(io::to_json(s)));
  EXPECT_EQ(io::to_json(back), io::to_json(s));
  EXPECT_EQ(back.error(60.0, est::SignalSubset::r_theta), 0.003);
}

TEST(Files, DatasetAndModelOnDisk) {
  const auto dir = std::filesystem::temp_directory_path() / ("smaprop_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  std::filesystem::create_directories(dir);
  data::Dataset d;
  d.header = {1, "nocontact", 1, 0.1, "00"};
  d.rows.resize(2);
  d.rows[1].k = 1;
  d.rows[0].resistance = d.rows[1].resistance = 2.1;
  io::save_dataset((dir / "d.csv").string(), d);
  EXPECT_EQ(io::load_dataset((dir / "d.csv").string()).rows, d.rows);

  io::ContactModel c{est::SignalSubset::t_theta, random_model({"T", "theta"}, 2, 4)};
  io::write_text((dir / "c.json").string(), io::dump(io::to_json(c)));
  expect_same(io::load_contact_model((dir / "c.json").string()).model, c.model);

  EXPECT_THROW(io::load_dataset((dir / "missing.csv").string()), io::FormatError);
  EXPECT_THROW(io::load_pose_model((dir / "c.json").string()), io::FormatError);
  std::filesystem::remove_all(dir);
}
