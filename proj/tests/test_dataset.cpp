#include "smaprop/config.hpp"
#include "smaprop/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <string>

using namespace smaprop;
using data::Dataset;

namespace {

std::string serialize(const Dataset& d) {
  std::ostringstream ss;
  data::write_dataset(ss, d);
  return ss.str();
}

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return data::read_dataset(in);
}

config::GenerationConfig small_contact() {
  config::GenerationConfig cfg;
  cfg.apply_scale(config::Scale::ci);
  return cfg;
}

std::size_t expect_parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const data::ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError";
  return 0;
}

}  // namespace

TEST(DatasetFormat, RoundTripIsByteIdentical) {
  const auto d = data::generate_nocontact_dataset(config::GenerationConfig{}, 3);
  const auto text = serialize(d);
  const auto back = parse(text);
  EXPECT_EQ(back.header, d.header);
  EXPECT_EQ(back.rows, d.rows);
  EXPECT_EQ(serialize(back), text);
}

TEST(DatasetFormat, ErrorsCarryLineNumbers) {
  Dataset d;
  d.header = {1, "contact", 5, 0.1, "abc"};
  d.rows.resize(3);
  for (std::size_t i = 0; i < 3; ++i) {
    d.rows[i].k = i;
    d.rows[i].resistance = 2.0;
  }
  const auto text = serialize(d);
  // header is 7 lines; rows start on line 8

  std::string truncated = text.substr(0, text.size() - 5);
  EXPECT_EQ(expect_parse_error(truncated), 10u);

  std::string bad = text;
  bad.replace(bad.find("\n1,") + 1, 1, "x");
  EXPECT_EQ(expect_parse_error(bad), 9u);

  std::string version = text;
  version.replace(version.find("schema_version: 1"), 17, "schema_version: 2");
  try {
    parse(version);
    FAIL();
  } catch (const data::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported schema version 2"), std::string::npos);
  }

  EXPECT_EQ(expect_parse_error("hello\n"), 1u);
  EXPECT_EQ(expect_parse_error(""), 1u);
  EXPECT_GT(expect_parse_error(text.substr(0, text.find("k,t_s"))), 0u);

  std::string order = text;
  order.replace(order.rfind("\n2,") + 1, 1, "0");
  EXPECT_EQ(expect_parse_error(order), 10u);

  std::string label = text;
  label.replace(label.size() - 2, 1, "7");
  EXPECT_EQ(expect_parse_error(label), 10u);
}

TEST(DatasetValidate, FlagsEachInvariant) {
  Dataset d;
  d.rows.resize(6);
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    d.rows[i].k = i;
    d.rows[i].temperature = 50.0;
    d.rows[i].resistance = 2.0;
    d.rows[i].theta = 0.2;
  }
  EXPECT_TRUE(data::validate(d).empty());
  d.rows[0].temperature = 10.0;
  d.rows[1].temperature = 150.0;
  d.rows[2].resistance = 0.0;
  d.rows[3].theta = 2.0;
  d.rows[4].external_force = 0.1;  // contact label still false
  d.rows[5].k = 4;
  const auto issues = data::validate(d, {22.0, 0.5, 135.0});
  EXPECT_EQ(issues.size(), 6u);
}

TEST(NoContact, ShapeAndInvariants) {
  const config::GenerationConfig cfg;
  const auto d = data::generate_nocontact_dataset(cfg, 11);
  ASSERT_EQ(d.rows.size(), 600u);
  EXPECT_EQ(d.header.kind, "nocontact");
  EXPECT_TRUE(data::validate(d, {plant::kAmbient, cfg.plant.sigma_temp, cfg.nocontact.t_max}).empty());
  std::size_t cold = 0;
  for (const auto& f : d.rows) {
    EXPECT_FALSE(f.contact);
    cold += f.temperature < 100.0 && f.resistance > 1.7;
  }
  EXPECT_GT(cold, 0u);
  EXPECT_LT(cold, 600u);
}

TEST(NoContact, DeterministicPerSeed) {
  const config::GenerationConfig cfg;
  EXPECT_EQ(serialize(data::generate_nocontact_dataset(cfg, 4)), serialize(data::generate_nocontact_dataset(cfg, 4)));
  EXPECT_NE(serialize(data::generate_nocontact_dataset(cfg, 4)), serialize(data::generate_nocontact_dataset(cfg, 5)));
}

TEST(NoContact, FlatScheduleStaysNearRest) {
  config::GenerationConfig cfg;
  cfg.nocontact.theta_lo_deg = 0.0;
  cfg.nocontact.theta_hi_deg = 1e-9;
  cfg.nocontact.trials = 2;
  const auto d = data::generate_nocontact_dataset(cfg, 1);
  for (const auto& f : d.rows) {
    EXPECT_LT(f.theta, config::deg2rad(1.5));  // bend sensor noise only
    EXPECT_LT(f.temperature, cfg.plant.a_s);
  }
}

TEST(Contact, CiProfileCoversGrid) {
  auto cfg = small_contact();
  cfg.contact.threads = 1;
  const auto d = data::generate_contact_dataset(cfg, 2);
  ASSERT_EQ(d.rows.size(), 2400u);
  EXPECT_EQ(cfg.contact.cells(), 16u);
  EXPECT_TRUE(data::validate(d, {plant::kAmbient, cfg.plant.sigma_temp, 130.0}).empty());
  for (std::size_t i = 0; i < d.rows.size(); ++i) EXPECT_EQ(d.rows[i].k, i);

  // Cells are laid out plate-major: cell c covers rows [150 c, 150 (c + 1)).
  auto contacts = [&](std::size_t cell) {
    return std::count_if(d.rows.begin() + 150 * cell, d.rows.begin() + 150 * (cell + 1),
                         [](const plant::SampleFrame& f) { return f.contact; });
  };
  // d = 20 mm vs d = 50 mm, both at T_max = 85
  EXPECT_GT(contacts(0), contacts(12));
  for (std::size_t cell = 0; cell < 16; ++cell) {
    const double t_max = cfg.contact.t_max[cell % 4];
    for (std::size_t i = 150 * cell; i < 150 * (cell + 1); ++i) {
      EXPECT_LE(d.rows[i].temperature, t_max + 5 * cfg.plant.sigma_temp);
    }
  }
}

TEST(Contact, ThreadCountDoesNotChangeOutput) {
  auto cfg = small_contact();
  cfg.contact.rows_per_cell = 40;
  cfg.contact.threads = 1;
  const auto a = serialize(data::generate_contact_dataset(cfg, 9));
  cfg.contact.threads = 4;
  EXPECT_EQ(serialize(data::generate_contact_dataset(cfg, 9)), a);
}

TEST(Contact, NoiselessTemperatureRespectsCellLimit) {
  auto cfg = small_contact();
  cfg.plant.sigma_temp = 0.0;
  cfg.contact.rows_per_cell = 60;
  const auto d = data::generate_contact_dataset(cfg, 1);
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    EXPECT_LE(d.rows[i].temperature, cfg.contact.t_max[(i / 60) % 4] + 1e-6);
  }
}

TEST(Contact, FullProfileRowCount) {
  config::GenerationConfig cfg;
  cfg.apply_scale(config::Scale::full);
  EXPECT_EQ(cfg.contact.rows(), 24000u);
}

TEST(Seeds, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(data::derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(data::derive_seed(42, 3), data::derive_seed(42, 3));
}

TEST(Config, DefaultsRoundTripThroughJson) {
  config::GenerationConfig c;
  c.plant.a_f = 97.0;
  c.contact.plate_mm = {25.0};
  const auto j = config::to_json(c);
  config::GenerationConfig back;
  config::from_json(j, back);
  EXPECT_EQ(config::to_json(back), j);
  EXPECT_EQ(back.plant.a_f, 97.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  config::GenerationConfig c;
  EXPECT_THROW(config::from_json(config::json{{"gama", 0.9}}, c), config::ConfigError);
  EXPECT_THROW(config::from_json(config::json{{"plant", {{"a_ff", 1}}}}, c), config::ConfigError);
  EXPECT_THROW(config::from_json(config::json{{"gamma", 1.5}}, c), config::ConfigError);
  EXPECT_THROW(config::from_json(config::json{{"gamma", "high"}}, c), config::ConfigError);
  config::GenerationConfig d;
  EXPECT_THROW(config::from_json(config::json{{"plant", {{"a_s", 40}}}}, d), std::domain_error);
  EXPECT_THROW(config::load_config("/nonexistent/config.json"), config::ConfigError);
  EXPECT_THROW(config::parse_scale("huge"), config::ConfigError);
}
