// Logged datasets: the comma-separated file format, validation, and the two
// collection procedures (free motion and plate contact).
#pragma once

#include "smaprop/config.hpp"
#include "smaprop/plant.hpp"
#include "smaprop/safety.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace smaprop::data {

using plant::SampleFrame;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kMagic = "# smaprop-dataset";
inline constexpr std::string_view kColumns = "k,t_s,V_volts,i_amps,R_ohm,T_degC,theta_rad,F_ext_N,contact";

/// Malformed or unsupported file content; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Generation hit a state the supervisor should make impossible.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Header {
  int schema_version = kSchemaVersion;
  std::string kind;  // nocontact | contact
  std::uint64_t seed = 0;
  double tick_s = 0.1;
  std::string scenario_hash;

  bool operator==(const Header&) const = default;
};

struct Dataset {
  Header header;
  std::vector<SampleFrame> rows;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// splitmix64 step; derives independent per-cell seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
  out << kMagic << '\n';
  out << "# schema_version: " << d.header.schema_version << '\n';
  out << "# kind: " << d.header.kind << '\n';
  out << "# seed: " << d.header.seed << '\n';
  out << "# tick_s: " << format_double(d.header.tick_s) << '\n';
  out << "# scenario_hash: " << d.header.scenario_hash << '\n';
  out << kColumns << '\n';
  for (const auto& f : d.rows) {
    out << f.k << ',' << format_double(f.t_s) << ',' << format_double(f.volts) << ','
        << format_double(f.amps) << ',' << format_double(f.resistance) << ','
        << format_double(f.temperature) << ',' << format_double(f.theta) << ','
        << format_double(f.external_force) << ',' << (f.contact ? 1 : 0) << '\n';
  }
}

namespace detail {

inline double parse_double(std::string_view s, std::size_t line, const char* col) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(line, std::string("bad number in column ") + col + ": '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line, const char* col) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(line, std::string("bad integer in column ") + col + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++n;
  if (line != kMagic) throw ParseError(n, "not a smaprop dataset (missing '# smaprop-dataset')");

  std::map<std::string, std::string> meta;
  bool have_columns = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.starts_with("# ")) {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) throw ParseError(n, "malformed header line");
      meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
      continue;
    }
    if (line != kColumns) throw ParseError(n, "unexpected column header '" + line + "'");
    have_columns = true;
    break;
  }
  if (!have_columns) throw ParseError(n + 1, "truncated file: no column header");

  auto need = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError(n, std::string("header is missing '") + key + "'");
    return it->second;
  };
  d.header.schema_version = static_cast<int>(detail::parse_uint(need("schema_version"), n, "schema_version"));
  if (d.header.schema_version != kSchemaVersion) {
    throw ParseError(n, "unsupported schema version " + std::to_string(d.header.schema_version));
  }
  d.header.kind = need("kind");
  d.header.seed = detail::parse_uint(need("seed"), n, "seed");
  d.header.tick_s = detail::parse_double(need("tick_s"), n, "tick_s");
  d.header.scenario_hash = need("scenario_hash");

  static constexpr const char* names[] = {"k", "t_s", "V_volts", "i_amps", "R_ohm",
                                          "T_degC", "theta_rad", "F_ext_N", "contact"};
  while (std::getline(in, line)) {
    ++n;
    std::string_view rest(line);
    std::string_view fields[9];
    std::size_t count = 0;
    while (true) {
      const auto comma = rest.find(',');
      if (count == 9) throw ParseError(n, "too many columns");
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != 9) throw ParseError(n, "expected 9 columns, found " + std::to_string(count));
    SampleFrame f;
    f.k = detail::parse_uint(fields[0], n, names[0]);
    f.t_s = detail::parse_double(fields[1], n, names[1]);
    f.volts = detail::parse_double(fields[2], n, names[2]);
    f.amps = detail::parse_double(fields[3], n, names[3]);
    f.resistance = detail::parse_double(fields[4], n, names[4]);
    f.temperature = detail::parse_double(fields[5], n, names[5]);
    f.theta = detail::parse_double(fields[6], n, names[6]);
    f.external_force = detail::parse_double(fields[7], n, names[7]);
    if (fields[8] != "0" && fields[8] != "1") throw ParseError(n, "contact must be 0 or 1");
    f.contact = fields[8] == "1";
    if (!d.rows.empty() && f.k <= d.rows.back().k) throw ParseError(n, "k is not strictly increasing");
    d.rows.push_back(f);
  }
  return d;
}

struct ValidationLimits {
  double ambient = plant::kAmbient;
  double sigma_temp = 0.5;
  double t_max = 1e300;      // configured supervisor limit
  double slack_sigmas = 5.0; // allowance for measurement noise on logged T
};

/// Returns one message per violated row invariant; empty when the data is valid.
inline std::vector<std::string> validate(const Dataset& d, const ValidationLimits& lim = {}) {
  std::vector<std::string> issues;
  const double slack = lim.slack_sigmas * lim.sigma_temp;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const auto& f = d.rows[i];
    auto bad = [&](const std::string& what) { issues.push_back("row k=" + std::to_string(f.k) + ": " + what); };
    if (i > 0 && f.k <= d.rows[i - 1].k) bad("k not strictly increasing");
    if (f.temperature < lim.ambient - slack) bad("temperature below ambient");
    if (f.temperature > lim.t_max + slack) bad("temperature above configured T_max");
    if (!(f.resistance > 0.0)) bad("non-positive resistance");
    if (!(f.theta >= 0.0 && f.theta <= beam::kMaxBend)) bad("theta outside [0, pi/2]");
    if (!(f.external_force >= 0.0)) bad("negative external force");
    if (f.contact != (f.external_force > 0.0)) bad("contact label disagrees with F_ext");
  }
  return issues;
}

inline std::string config_hash(const config::GenerationConfig& c, const std::string& kind) {
  auto j = config::to_json(c);
  j["contact"].erase("threads");  // output does not depend on it
  return hex64(fnv1a(kind + ":" + j.dump()));
}

namespace detail {

inline void check_supervised(const plant::Plant& p, double t_max) {
  if (p.state().temperature > t_max + 1e-6) {
    throw GenerationError("plant temperature " + std::to_string(p.state().temperature) +
                          " degC exceeded the supervisor limit " + std::to_string(t_max));
  }
}

}  // namespace detail

/// Free-motion data: PI babbling through random setpoints, sampled once at the
/// end of every hold.
inline Dataset generate_nocontact_dataset(const config::GenerationConfig& cfg, std::uint64_t seed) {
  const auto& plan = cfg.nocontact;
  safety::Schedule schedule;
  for (std::size_t t = 0; t < plan.trials; ++t) {
    const auto trial = safety::random_setpoint_schedule(plan.setpoints_per_trial, config::deg2rad(plan.theta_lo_deg),
                                                        config::deg2rad(plan.theta_hi_deg), plan.hold_ticks,
                                                        derive_seed(seed, 1000 + t));
    schedule.insert(schedule.end(), trial.begin(), trial.end());
  }
  safety::SafetyParams sp{cfg.plant.thermal, plan.t_max, cfg.gamma};
  plant::ClosedLoop loop(cfg.plant, sp, safety::Babbler(schedule, cfg.gains), cfg.tick_s, derive_seed(seed, 0));

  Dataset d;
  d.header = {kSchemaVersion, "nocontact", seed, cfg.tick_s, config_hash(cfg, "nocontact")};
  while (!loop.babbler().finished()) {
    const bool sample = loop.babbler().hold_ending();
    auto f = loop.tick({});
    detail::check_supervised(loop.plant(), plan.t_max);
    if (sample) {
      f.k = d.rows.size();
      d.rows.push_back(f);
    }
  }
  return d;
}

/// Rows for one (plate, T_max) cell.
inline std::vector<SampleFrame> simulate_contact_cell(const config::GenerationConfig& cfg, double plate_mm,
                                                      double t_max, std::uint64_t seed) {
  const auto& plan = cfg.contact;
  const std::size_t ticks = plan.rows_per_cell * plan.log_every;

  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> angle(config::deg2rad(plan.theta_lo_deg), config::deg2rad(plan.theta_hi_deg));
  std::uniform_int_distribution<std::size_t> hold(plan.hold_min_ticks, plan.hold_max_ticks);
  safety::Schedule schedule;
  for (std::size_t total = 0; total < ticks;) {
    const safety::Setpoint sp{angle(rng), hold(rng)};
    total += sp.hold;
    schedule.push_back(sp);
  }

  safety::SafetyParams sp{cfg.plant.thermal, t_max, cfg.gamma};
  plant::ClosedLoop loop(cfg.plant, sp, safety::Babbler(schedule, cfg.gains), cfg.tick_s, derive_seed(seed, 2));
  const plant::Loading load{plate_mm, 0.0};
  std::vector<SampleFrame> rows;
  rows.reserve(plan.rows_per_cell);
  for (std::size_t t = 0; t < ticks; ++t) {
    auto f = loop.tick(load);
    detail::check_supervised(loop.plant(), t_max);
    if ((t + 1) % plan.log_every == 0) rows.push_back(f);
  }
  return rows;
}

/// The full grid; cells may run concurrently but rows are always ordered by
/// (cell index, time) and each cell's randomness depends only on its index.
inline Dataset generate_contact_dataset(const config::GenerationConfig& cfg, std::uint64_t seed) {
  const auto& plan = cfg.contact;
  if (plan.plate_mm.empty() || plan.t_max.empty()) throw config::ConfigError("contact plan has an empty grid");

  struct Cell {
    double plate;
    double t_max;
  };
  std::vector<Cell> cells;
  for (double d : plan.plate_mm) {
    for (double t : plan.t_max) cells.push_back({d, t});
  }

  std::vector<std::vector<SampleFrame>> results(cells.size());
  std::size_t threads = plan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.threads;
  if (threads <= 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      results[c] = simulate_contact_cell(cfg, cells[c].plate, cells[c].t_max, derive_seed(seed, 100 + c));
    }
  } else {
    for (std::size_t start = 0; start < cells.size(); start += threads) {
      std::vector<std::future<std::vector<SampleFrame>>> batch;
      for (std::size_t c = start; c < std::min(cells.size(), start + threads); ++c) {
        batch.push_back(std::async(std::launch::async, [&cfg, cell = cells[c], s = derive_seed(seed, 100 + c)] {
          return simulate_contact_cell(cfg, cell.plate, cell.t_max, s);
        }));
      }
      for (std::size_t i = 0; i < batch.size(); ++i) results[start + i] = batch[i].get();
    }
  }

  Dataset d;
  d.header = {kSchemaVersion, "contact", seed, cfg.tick_s, config_hash(cfg, "contact")};
  d.rows.reserve(plan.rows());
  for (auto& r : results) {
    for (auto& f : r) {
      f.k = d.rows.size();
      d.rows.push_back(f);
    }
  }
  return d;
}

}  // namespace smaprop::data
