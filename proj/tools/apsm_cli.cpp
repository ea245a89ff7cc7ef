// Command-line front end. Links only the C API in libapsm.
//
// Parameter precedence: command-line flag > --config file > built-in default.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "apsm/apsm.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void raise(int exit_code, std::string code, std::string message) {
  throw CliError{exit_code, std::move(code), std::move(message)};
}

int exit_code_for(apsm_status s) {
  switch (s) {
    case APSM_ERR_INVALID_ARGUMENT:
    case APSM_ERR_DIMENSION:
    case APSM_ERR_BUDGET:
    case APSM_ERR_PARSE: return kExitConfig;
    default: return kExitRuntime;
  }
}

void check(apsm_status s) {
  if (s != APSM_OK) raise(exit_code_for(s), apsm_status_string(s), apsm_last_error());
}

// RAII owners for the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Experiment = Handle<apsm_experiment, apsm_experiment_free>;
using Table = Handle<apsm_table, apsm_table_free>;
using Instance = Handle<apsm_instance, apsm_instance_free>;
using Detection = Handle<apsm_detection, apsm_detection_free>;

std::string take_string(char* s) {
  std::string out(s ? s : "");
  apsm_string_free(s);
  return out;
}

struct Flags {
  std::optional<long> k, n, trials, iters, trial;
  std::optional<std::string> mod, channel, detectors, out, format, config, dump_trace, instance, save_instance;
  std::optional<double> rho_tx, rho_rx, rho0, growth, mu, beta, beta_geom, tau;
  std::vector<double> snr;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<long> scale;
  bool include_stderr = false;
  bool print_config = false;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--k", f.k, "number of single-antenna transmitters K")->check(CLI::PositiveNumber);
  app->add_option("--n", f.n, "number of receive antennas N")->check(CLI::PositiveNumber);
  app->add_option("--mod", f.mod, "modulation")->check(CLI::IsMember({"qpsk", "16qam", "64qam"}));
  app->add_option("--channel", f.channel, "channel model")->check(CLI::IsMember({"iid", "kronecker"}));
  app->add_option("--rho-tx", f.rho_tx, "transmit correlation (kronecker)");
  app->add_option("--rho-rx", f.rho_rx, "receive correlation (kronecker)");
  app->add_option("--snr", f.snr, "SNR in dB (repeatable)")->take_all()->allow_extra_args(false);
  app->add_option("--trials", f.trials, "Monte-Carlo trials");
  app->add_option("--iters", f.iters, "APSM iterations");
  app->add_option("--detectors", f.detectors, "comma-separated detector list");
  app->add_option("--rho0", f.rho0, "initial rho");
  app->add_option("--growth", f.growth, "rho growth factor per iteration");
  app->add_option("--mu", f.mu, "relaxation parameter");
  app->add_option("--beta", f.beta, "constant perturbation scale");
  app->add_option("--beta-geom", f.beta_geom, "geometric perturbation base b (beta_n = b^n)");
  app->add_option("--tau", f.tau, "soft-threshold level for apsm_l1");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--workers", f.workers, "worker threads (0: all cores)");
  app->add_option("--config", f.config, "JSON experiment config file");
  app->add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(kExitConfig, "io_error", "cannot open config file '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) raise(kExitConfig, "invalid_argument", "config file '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    raise(kExitConfig, "parse_error", "config file '" + path + "': " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json resolve_config(const Flags& f) {
  json j = f.config ? load_config_file(*f.config) : json::object();
  if (f.beta && f.beta_geom) raise(kExitConfig, "invalid_argument", "--beta and --beta-geom are mutually exclusive");
  if (f.k) j["k"] = *f.k;
  if (f.n) j["n"] = *f.n;
  if (f.mod) j["modulation"] = *f.mod;
  if (f.channel) j["channel"]["kind"] = *f.channel;
  if (f.rho_tx) j["channel"]["rho_tx"] = *f.rho_tx;
  if (f.rho_rx) j["channel"]["rho_rx"] = *f.rho_rx;
  if (!f.snr.empty()) j["snr_db"] = f.snr;
  if (f.trials) j["trials"] = *f.trials;
  if (f.iters) j["iters"] = *f.iters;
  if (f.detectors) j["detectors"] = split_list(*f.detectors);
  if (f.rho0) j["apsm"]["rho0"] = *f.rho0;
  if (f.growth) j["apsm"]["growth"] = *f.growth;
  if (f.mu) j["apsm"]["mu"] = *f.mu;
  if (f.beta) {
    j["apsm"]["beta"] = *f.beta;
    j["apsm"].erase("beta_geom");
  }
  if (f.beta_geom) {
    j["apsm"]["beta_geom"] = *f.beta_geom;
    j["apsm"].erase("beta");
  }
  if (f.tau) j["apsm"]["tau"] = *f.tau;
  if (f.seed) j["seed"] = *f.seed;
  if (f.workers) j["workers"] = *f.workers;
  return j;
}

void make_experiment(const Flags& f, Experiment& exp) {
  const std::string text = resolve_config(f).dump();
  check(apsm_experiment_create(text.c_str(), exp.out()));
}

json experiment_json(const Experiment& exp) {
  char* s = nullptr;
  check(apsm_experiment_to_json(exp.get(), &s));
  return json::parse(take_string(s));
}

apsm_format output_format(const Flags& f) {
  if (!f.format || *f.format == "csv") return APSM_FORMAT_CSV;
  return APSM_FORMAT_JSON;
}

void write_output(const std::string& text, const Flags& f) {
  if (!f.out) {
    std::cout << text;
    return;
  }
  std::ofstream out(*f.out, std::ios::binary | std::ios::trunc);
  if (!out) raise(kExitRuntime, "io_error", "cannot open '" + *f.out + "' for writing");
  out << text;
  if (!out) raise(kExitRuntime, "io_error", "write to '" + *f.out + "' failed");
}

int run_table(const Flags& f, bool vs_snr) {
  Experiment exp;
  make_experiment(f, exp);
  if (f.print_config) {
    std::cout << experiment_json(exp).dump(2) << "\n";
    return kExitOk;
  }
  Table table;
  check(vs_snr ? apsm_run_ser_vs_snr(exp.get(), table.out()) : apsm_run_ser_vs_iter(exp.get(), table.out()));
  if (f.out) {
    check(apsm_table_write(table.get(), f.out->c_str(), output_format(f), f.include_stderr ? 1 : 0));
  } else {
    char* s = nullptr;
    check(apsm_table_to_string(table.get(), output_format(f), f.include_stderr ? 1 : 0, &s));
    std::cout << take_string(s);
  }
  return kExitOk;
}

std::string trace_path_for(const std::string& base, const std::string& detector, bool several) {
  if (!several) return base;
  const auto dot = base.find_last_of('.');
  const auto slash = base.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return base + "." + detector;
  return base.substr(0, dot) + "." + detector + base.substr(dot);
}

void load_or_generate(const Flags& f, const Experiment& exp, const json& cfg, Instance& inst) {
  if (f.instance) {
    check(apsm_instance_load_json(f.instance->c_str(), inst.out()));
  } else {
    const double snr = cfg.at("snr_db").at(0).get<double>();
    check(apsm_instance_generate(exp.get(), static_cast<std::uint64_t>(f.trial.value_or(0)), snr, inst.out()));
  }
  if (f.save_instance) check(apsm_instance_save_json(inst.get(), f.save_instance->c_str()));
}

int run_detect(const Flags& f) {
  Experiment exp;
  make_experiment(f, exp);
  const json cfg = experiment_json(exp);
  if (f.print_config) {
    std::cout << cfg.dump(2) << "\n";
    return kExitOk;
  }
  Instance inst;
  load_or_generate(f, exp, cfg, inst);
  const auto detectors = cfg.at("detectors").get<std::vector<std::string>>();
  int apsm_count = 0;
  for (const auto& d : detectors) apsm_count += d.rfind("apsm_", 0) == 0 ? 1 : 0;

  std::ostringstream report;
  for (const auto& d : detectors) {
    Detection det;
    check(apsm_detect(exp.get(), inst.get(), d.c_str(), 0, det.out()));
    std::int64_t errors = 0;
    double objective = 0.0;
    check(apsm_detection_symbol_errors(det.get(), &errors));
    check(apsm_detection_objective(det.get(), &objective));
    char line[256];
    std::snprintf(line, sizeof line, "detector=%s symbol_errors=%lld objective=%.17g\n", d.c_str(),
                  static_cast<long long>(errors), objective);
    report << line;
    if (f.dump_trace && apsm_detection_has_trace(det.get())) {
      const std::string path = trace_path_for(*f.dump_trace, d, apsm_count > 1);
      check(apsm_detection_write_trace_csv(det.get(), path.c_str()));
    }
  }
  write_output(report.str(), f);
  return kExitOk;
}

int run_diagnose(const Flags& f) {
  Experiment exp;
  make_experiment(f, exp);
  const json cfg = experiment_json(exp);
  if (f.print_config) {
    std::cout << cfg.dump(2) << "\n";
    return kExitOk;
  }
  Instance inst;
  load_or_generate(f, exp, cfg, inst);
  json reports = json::object();
  for (const auto& d : cfg.at("detectors").get<std::vector<std::string>>()) {
    if (d.rfind("apsm_", 0) != 0) continue;
    Detection det;
    check(apsm_detect(exp.get(), inst.get(), d.c_str(), 1, det.out()));
    char* s = nullptr;
    check(apsm_detection_report_json(det.get(), &s));
    reports[d] = json::parse(take_string(s));
  }
  if (reports.empty()) raise(kExitConfig, "invalid_argument", "diagnose needs at least one APSM detector");
  write_output(reports.dump(2) + "\n", f);
  return kExitOk;
}

int run_validate(const Flags& f) {
  apsm_suite_result results[8];
  std::size_t count = 0;
  check(apsm_validate(f.seed.value_or(1), f.scale.value_or(1), results, 8, &count));
  std::ostringstream os;
  long passed = 0;
  for (std::size_t i = 0; i < count && i < 8; ++i) {
    const auto& r = results[i];
    const bool ok = r.checks > 0 && r.failures == 0;
    passed += ok ? 1 : 0;
    char line[256];
    std::snprintf(line, sizeof line, "suite=%s checks=%lld failures=%lld max_excess=%.3g %s\n", r.name,
                  static_cast<long long>(r.checks), static_cast<long long>(r.failures), r.max_excess,
                  ok ? "PASS" : "FAIL");
    os << line;
  }
  os << "passed=" << passed << " failed=" << (static_cast<long>(count) - passed) << "\n";
  write_output(os.str(), f);
  return passed == static_cast<long>(count) ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APSM MIMO detection simulator"};
  app.require_subcommand(1);
  Flags f;

  auto* ser_iter = app.add_subcommand("ser-iter", "SER as a function of the iteration index");
  auto* ser_snr = app.add_subcommand("ser-snr", "SER as a function of the SNR");
  auto* detect = app.add_subcommand("detect", "run detectors on one seeded instance");
  auto* diagnose = app.add_subcommand("diagnose", "audit one seeded APSM run and print the diagnostic report");
  auto* validate = app.add_subcommand("validate", "run the randomized invariant suites");

  for (auto* sub : {ser_iter, ser_snr, detect, diagnose}) {
    add_experiment_flags(sub, f);
    sub->add_option("--out", f.out, "output path (default: stdout)");
  }
  for (auto* sub : {ser_iter, ser_snr}) {
    sub->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--stderr", f.include_stderr, "append a standard-error column");
  }
  for (auto* sub : {detect, diagnose}) {
    sub->add_option("--trial", f.trial, "trial index of the seeded instance");
    sub->add_option("--instance", f.instance, "load the channel instance from a JSON file");
    sub->add_option("--save-instance", f.save_instance, "write the channel instance as JSON");
  }
  detect->add_option("--dump-trace", f.dump_trace, "write the APSM iterate trace CSV");
  validate->add_option("--seed", f.seed, "master seed");
  validate->add_option("--scale", f.scale, "multiply the number of random draws");
  validate->add_option("--out", f.out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: code=usage message=\"" << msg << "\"\n";
    return kExitConfig;
  }

  try {
    if (*ser_iter) return run_table(f, false);
    if (*ser_snr) return run_table(f, true);
    if (*detect) return run_detect(f);
    if (*diagnose) return run_diagnose(f);
    if (*validate) return run_validate(f);
  } catch (const CliError& e) {
    std::string msg = e.message;
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: code=" << e.code << " message=\"" << msg << "\"\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: code=internal_error message=\"" << e.what() << "\"\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
