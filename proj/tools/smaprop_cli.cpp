// smaprop: simulate, fit, evaluate, calibrate, sweep and serve from the shell.
//
// Exit codes: 0 success, 2 validation failure (bad input, config or data),
// 3 fit failure, 1 anything else.

#include "smaprop/config.hpp"
#include "smaprop/contact.hpp"
#include "smaprop/dataset.hpp"
#include "smaprop/demo.hpp"
#include "smaprop/estimators.hpp"
#include "smaprop/io.hpp"
#include "smaprop/server.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace smaprop;

constexpr int kExitValidation = 2;
constexpr int kExitFit = 3;

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string data;
  std::string out;
  std::string config;
  std::uint64_t seed = 1;
  std::size_t folds = 3;
  int degree = -1;  // per-verb default when negative
  std::string signals = "rttheta";
  std::string scale = "full";
  std::vector<double> plate_mm;
  std::vector<double> tmax_degc;
  std::size_t threads = 0;
};

config::GenerationConfig load_cfg(const Common& c) {
  auto cfg = c.config.empty() ? config::GenerationConfig{} : config::load_config(c.config);
  return cfg;
}

std::size_t degree_or(const Common& c, std::size_t fallback) {
  return c.degree < 0 ? fallback : static_cast<std::size_t>(c.degree);
}

data::Dataset load_data(const Common& c) {
  if (c.data.empty()) throw ValidationFailure("--data is required");
  return io::load_dataset(c.data);
}

void write_out(const Common& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
  } else {
    io::write_text(c.out, text);
  }
}

int cmd_simulate(const Common& c, const std::string& kind) {
  auto cfg = load_cfg(c);
  cfg.apply_scale(config::parse_scale(c.scale));
  if (!c.plate_mm.empty()) cfg.contact.plate_mm = c.plate_mm;
  if (!c.tmax_degc.empty()) {
    cfg.contact.t_max = c.tmax_degc;
    cfg.nocontact.t_max = c.tmax_degc.front();
  }
  cfg.contact.threads = c.threads;
  for (double d : cfg.contact.plate_mm) {
    if (!(d > 0.0)) throw ValidationFailure("--plate-mm values must be > 0");
  }

  const bool contact = kind == "contact";
  const auto d = contact ? data::generate_contact_dataset(cfg, c.seed) : data::generate_nocontact_dataset(cfg, c.seed);
  double t_max = cfg.nocontact.t_max;
  if (contact) t_max = *std::max_element(cfg.contact.t_max.begin(), cfg.contact.t_max.end());
  const auto issues = data::validate(d, {plant::kAmbient, cfg.plant.sigma_temp, t_max});
  for (const auto& i : issues) std::cerr << "invalid: " << i << '\n';

  if (c.out.empty()) throw ValidationFailure("--out is required");
  io::save_dataset(c.out, d);
  std::size_t in_contact = 0;
  for (const auto& f : d.rows) in_contact += f.contact;
  std::cerr << "wrote " << d.rows.size() << " rows (" << in_contact << " in contact) to " << c.out << '\n';
  return issues.empty() ? 0 : kExitValidation;
}

int cmd_fit_pose(const Common& c) {
  const auto cfg = load_cfg(c);
  const auto d = load_data(c);
  const auto labeled = est::label_sma_force(d.rows, cfg.plant.limb);
  if (labeled.rejected > 0) std::cerr << "skipped " << labeled.rejected << " rows with theta outside [0, pi/2]\n";
  const auto m = degree_or(c, 2);
  const auto model = est::fit_pose_model(labeled.samples, m, m, {}, cfg.plant.limb);
  write_out(c, io::dump(io::to_json(model)));
  return 0;
}

int cmd_fit_contact(const Common& c) {
  const auto d = load_data(c);
  const auto subset = est::parse_subset(c.signals);
  const io::ContactModel model{subset, est::fit_contact_model(d.rows, subset, degree_or(c, 3))};
  write_out(c, io::dump(io::to_json(model)));
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& target, const std::string& model_path) {
  const auto cfg = load_cfg(c);
  const auto d = load_data(c);
  io::Report r;
  r.target = target;
  r.seed = c.seed;

  if (!model_path.empty()) {
    // Score a fitted model as-is on the given data.
    const auto doc = io::parse_json(io::read_text(model_path), model_path);
    const std::string schema = doc.value("schema", "");
    if (schema == io::kPoseSchema) {
      const auto model = io::pose_model_from_json(doc);
      const auto labeled = est::label_sma_force(d.rows, model.limb);
      r.target = "pose";
      r.test = est::evaluate(std::span<const est::ForceSample>(labeled.samples),
                             [&](const est::ForceSample& s) { return est::predict_sma_force(model, s.temperature, s.resistance); },
                             [](const est::ForceSample& s) { return s.force; });
    } else {
      const auto model = io::contact_model_from_json(doc);
      r.target = "contact";
      r.signals = est::to_string(model.subset);
      r.test = est::evaluate(std::span<const plant::SampleFrame>(d.rows),
                             [&](const plant::SampleFrame& f) { return est::predict_contact_force(model.model, f); },
                             [](const plant::SampleFrame& f) { return f.external_force; });
    }
  } else if (target == "pose") {
    const auto labeled = est::label_sma_force(d.rows, cfg.plant.limb);
    const auto m = degree_or(c, 2);
    const auto cv = est::cross_validate_pose(labeled.samples, c.folds, c.seed, m, m, {}, cfg.plant.limb);
    r.folds = c.folds;
    r.test = cv.test;
    r.train = cv.train;
  } else {
    const auto subset = est::parse_subset(c.signals);
    const auto cv = est::cross_validate_contact(d.rows, subset, degree_or(c, 3), c.folds, c.seed);
    r.signals = est::to_string(subset);
    r.folds = c.folds;
    r.test = cv.test;
    r.train = cv.train;
  }
  std::cerr << r.target << (r.signals.empty() ? "" : " {" + r.signals + "}") << ": held-out e=" << r.test.mean_abs_error
            << " N, e_p=" << r.test.mean_pct_error << "%";
  if (r.folds > 0) std::cerr << "; training e=" << r.train.mean_abs_error << " N";
  std::cerr << '\n';
  write_out(c, io::dump(io::to_json(r)));
  return 0;
}

contact::SweepConfig sweep_cfg(const Common& c) {
  contact::SweepConfig s;
  s.degree = degree_or(c, 3);
  s.folds = c.folds;
  s.seed = c.seed;
  return s;
}

void print_sweep(const contact::SweepResult& s) {
  std::fprintf(stderr, "%8s %12s %12s %12s\n", "T_max", "rttheta", "rtheta", "ttheta");
  std::vector<double> temps;
  for (const auto& r : s.rows) {
    if (temps.empty() || temps.back() != r.t_max) temps.push_back(r.t_max);
  }
  auto cell = [&](double t, est::SignalSubset sub) { return s.error(t, sub).value_or(NAN); };
  for (double t : temps) {
    std::fprintf(stderr, "%8.1f %12.6f %12.6f %12.6f\n", t, cell(t, est::SignalSubset::r_t_theta),
                 cell(t, est::SignalSubset::r_theta), cell(t, est::SignalSubset::t_theta));
  }
  for (double t : s.skipped) std::fprintf(stderr, "%8.1f skipped (too few rows or contact rows)\n", t);
  if (s.operational_limit) {
    std::fprintf(stderr, "operational limit: %.1f degC\n", *s.operational_limit);
  } else {
    std::fprintf(stderr, "operational limit: none\n");
  }
}

int cmd_sweep(const Common& c) {
  const auto d = load_data(c);
  const auto s = contact::sweep_tmax(d.rows, sweep_cfg(c));
  print_sweep(s);
  write_out(c, io::dump(io::to_json(s)));
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& criterion, const std::string& curve_path) {
  const auto d = load_data(c);
  const auto subset = est::parse_subset(c.signals);
  const auto cv = est::cross_validate_contact(d.rows, subset, degree_or(c, 3), c.folds, c.seed);
  std::vector<bool> truth;
  truth.reserve(d.rows.size());
  for (const auto& f : d.rows) truth.push_back(f.contact);
  const auto grid = contact::default_threshold_grid();
  auto r = contact::calibrate_threshold(cv.out_of_fold, truth, grid,
                                        contact::parse_criterion(criterion));
  const auto s = contact::sweep_tmax(d.rows, sweep_cfg(c));
  r.t_max_operational = s.operational_limit;
  r.error_table = s.rows;
  std::fprintf(stderr, "F*_thresh = %.3f N (%s): precision %.3f recall %.3f F1 %.3f\n", r.threshold, criterion.c_str(),
               r.best.precision, r.best.recall, r.best.f1);
  print_sweep(s);
  if (!curve_path.empty()) io::write_text(curve_path, io::curve_table(r));
  write_out(c, io::dump(io::to_json(r)));
  return 0;
}

demo::Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8090;
  std::string pose_model;
  std::string contact_model;
  double setpoint_deg = 20.0;
  std::string replay;
  std::uint64_t ticks = 0;
};

int cmd_serve(const Common& c, const ServeArgs& a) {
  const auto cfg = load_cfg(c);
  demo::ModelSet models;
  if (a.pose_model.empty() != a.contact_model.empty()) {
    throw ValidationFailure("give both --pose-model and --contact-model, or neither");
  }
  if (a.pose_model.empty()) {
    std::cerr << "no models given; training on simulated CI-scale data (seed " << c.seed << ")\n";
    models = demo::train_models(cfg, c.seed);
  } else {
    models.pose = io::load_pose_model(a.pose_model);
    models.contact = io::load_contact_model(a.contact_model);
  }
  demo::DemoConfig dc;
  dc.setpoint_deg = a.setpoint_deg;
  dc.seed = c.seed;
  if (!c.plate_mm.empty()) dc.plate_mm = c.plate_mm.front();
  if (!c.tmax_degc.empty()) dc.t_max = c.tmax_degc.front();
  if (!(dc.setpoint_deg >= 0.0 && dc.setpoint_deg <= 45.0)) throw ValidationFailure("--setpoint-deg must lie in [0, 45]");
  demo::DemoLoop loop(cfg, std::move(models), dc);

  if (!a.replay.empty()) {
    std::ifstream in(a.replay);
    if (!in) throw ValidationFailure("cannot open replay script '" + a.replay + "'");
    const auto script = demo::parse_script(in);
    std::uint64_t ticks = a.ticks;
    if (ticks == 0) ticks = (script.empty() ? 0 : script.back().at) + 100;
    std::vector<std::string> errors;
    const auto states = demo::replay(loop, script, ticks, &errors);
    for (const auto& e : errors) std::cerr << "rejected: " << e << '\n';
    std::ostringstream ss;
    demo::write_state_log(ss, states);
    write_out(c, ss.str());
    return 0;
  }

  demo::Server server(std::move(loop), {a.host, a.port, cfg.tick_s});
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on " << a.host << ":" << server.port() << '\n';
  server.run(a.ticks);
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-sensing SMA limb: data simulation, estimator fitting, contact calibration and live demo"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Base random seed");
    sub->add_option("--out", c.out, "Output file ('-' or omitted = stdout where allowed)");
  };
  auto add_data = [&](CLI::App* sub) { sub->add_option("--data", c.data, "Dataset file")->required(); };

  auto* sim = app.add_subcommand("simulate", "Generate a dataset from the synthetic plant");
  std::string kind = "contact";
  add_common(sim);
  sim->add_option("--kind", kind, "nocontact or contact")->check(CLI::IsMember({"nocontact", "contact"}));
  sim->add_option("--scale", c.scale, "full or ci")->check(CLI::IsMember({"full", "ci"}));
  sim->add_option("--plate-mm", c.plate_mm, "Plate distances (replaces the grid)");
  sim->add_option("--tmax-degc", c.tmax_degc, "Temperature limits (replaces the grid)");
  sim->add_option("--threads", c.threads, "Worker threads for grid cells (0 = all cores, 1 = sequential)");

  auto* fit_pose = app.add_subcommand("fit-pose", "Fit the hot/cold muscle-force model on free-motion data");
  add_common(fit_pose);
  add_data(fit_pose);
  fit_pose->add_option("--degree", c.degree, "Polynomial degree for both partitions (default 2)");

  auto* fit_contact = app.add_subcommand("fit-contact", "Fit a contact-force model");
  add_common(fit_contact);
  add_data(fit_contact);
  fit_contact->add_option("--degree", c.degree, "Polynomial degree (default 3)");
  fit_contact->add_option("--signals", c.signals, "rttheta, rtheta or ttheta")
      ->check(CLI::IsMember({"rttheta", "rtheta", "ttheta"}));

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate a model kind, or score a fitted model");
  std::string target = "contact";
  std::string model_path;
  add_common(evaluate);
  add_data(evaluate);
  evaluate->add_option("--target", target, "pose or contact")->check(CLI::IsMember({"pose", "contact"}));
  evaluate->add_option("--model", model_path, "Score this fitted model instead of cross-validating")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--degree", c.degree, "Polynomial degree");
  evaluate->add_option("--signals", c.signals, "rttheta, rtheta or ttheta")
      ->check(CLI::IsMember({"rttheta", "rtheta", "ttheta"}));
  evaluate->add_option("--folds", c.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));

  auto* calibrate = app.add_subcommand("calibrate", "Choose the contact threshold from held-out predictions");
  std::string criterion = "f1";
  std::string curve_path;
  add_common(calibrate);
  add_data(calibrate);
  calibrate->add_option("--degree", c.degree, "Polynomial degree (default 3)");
  calibrate->add_option("--signals", c.signals, "rttheta, rtheta or ttheta")
      ->check(CLI::IsMember({"rttheta", "rtheta", "ttheta"}));
  calibrate->add_option("--folds", c.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  calibrate->add_option("--criterion", criterion, "f1 or precision")->check(CLI::IsMember({"f1", "precision"}));
  calibrate->add_option("--curve", curve_path, "Also write the per-threshold metric table (CSV)");

  auto* sweep = app.add_subcommand("sweep-tmax", "Contact-force error per temperature limit and signal subset");
  add_common(sweep);
  add_data(sweep);
  sweep->add_option("--degree", c.degree, "Polynomial degree (default 3)");
  sweep->add_option("--folds", c.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));

  auto* serve = app.add_subcommand("serve", "Run the live contact demo over TCP, or replay a script headlessly");
  ServeArgs sa;
  add_common(serve);
  serve->add_option("--host", sa.host, "Listen address");
  serve->add_option("--port", sa.port, "Listen port (0 = ephemeral)");
  serve->add_option("--pose-model", sa.pose_model, "Pose model file")->check(CLI::ExistingFile);
  serve->add_option("--contact-model", sa.contact_model, "Contact model file")->check(CLI::ExistingFile);
  serve->add_option("--setpoint-deg", sa.setpoint_deg, "Initial held bend angle");
  serve->add_option("--plate-mm", c.plate_mm, "Optional plate distance")->expected(0, 1);
  serve->add_option("--tmax-degc", c.tmax_degc, "Temperature limit (default 135)")->expected(0, 1);
  serve->add_option("--replay", sa.replay, "Headless: run this command script and write the state log")
      ->check(CLI::ExistingFile);
  serve->add_option("--ticks", sa.ticks, "Stop after this many ticks (0 = run until stopped / script end + 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(c, kind);
    if (fit_pose->parsed()) return cmd_fit_pose(c);
    if (fit_contact->parsed()) return cmd_fit_contact(c);
    if (evaluate->parsed()) return cmd_evaluate(c, target, model_path);
    if (calibrate->parsed()) return cmd_calibrate(c, criterion, curve_path);
    if (sweep->parsed()) return cmd_sweep(c);
    if (serve->parsed()) return cmd_serve(c, sa);
  } catch (const est::FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kExitFit;
  } catch (const ValidationFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const data::ParseError& e) {
    std::cerr << "bad dataset: " << e.what() << '\n';
    return kExitValidation;
  } catch (const io::FormatError& e) {
    std::cerr << "bad file: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    // Too few rows to cross-validate, mismatched model inputs and the like.
    std::cerr << "fit failed: " << e.what() << '\n';
    return kExitFit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
