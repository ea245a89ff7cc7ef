#include "sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace apsm {

using nlohmann::json;

void ApsmOverrides::apply(ApsmConfig& cfg) const {
  if (beta && beta_geom) fail(ErrorCode::invalid_argument, "beta and beta_geom are mutually exclusive");
  if (rho0) cfg.rho.rho0 = *rho0;
  if (growth) cfg.rho.growth = *growth;
  if (mu) cfg.mu = *mu;
  if (stop_eps) cfg.stop_eps = *stop_eps;
  if (cfg.variant != Variant::plain) {
    if (beta) cfg.beta = BetaSchedule::constant(*beta);
    if (beta_geom) cfg.beta = BetaSchedule::geometric(*beta_geom);
  }
  if (tau) cfg.tau = *tau;
}

ApsmConfig ExperimentConfig::apsm_config(DetectorKind kind) const {
  ApsmConfig cfg = ApsmConfig::defaults(variant_of(kind));
  cfg.max_iters = iters;
  apsm.apply(cfg);
  if (auto it = apsm_per_detector.find(kind); it != apsm_per_detector.end()) it->second.apply(cfg);
  cfg.validate();
  return cfg;
}

unsigned ExperimentConfig::effective_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::invalid_argument, m); };
  if (k < 1) bad("K must be >= 1");
  if (k > n) bad("K (" + std::to_string(k) + ") must not exceed N (" + std::to_string(n) + ")");
  if (trials < 1) bad("trials must be >= 1");
  if (iters < 0) bad("iters must be >= 0");
  if (snr_db.empty()) bad("SNR grid must be nonempty");
  for (double s : snr_db) {
    if (!std::isfinite(s)) bad("SNR values must be finite");
  }
  if (std::set<double>(snr_db.begin(), snr_db.end()).size() != snr_db.size()) bad("SNR grid has duplicates");
  if (detectors.empty()) bad("detector list must be nonempty");
  if (std::set<DetectorKind>(detectors.begin(), detectors.end()).size() != detectors.size()) {
    bad("detector list has duplicates");
  }
  channel.validate();
  const Constellation c = constellation();
  for (DetectorKind d : detectors) {
    if (is_apsm(d)) apsm_config(d);
    if (d == DetectorKind::ml_bruteforce && ml_candidate_count(c, k) > kMlCandidateBudget) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.0f", ml_candidate_count(c, k));
      fail(ErrorCode::budget_exceeded,
           std::string("ml_bruteforce refused: ") + buf + " candidates exceed budget of 1000000");
    }
  }
}

namespace {

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_argument, std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::invalid_argument, where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) fail(ErrorCode::invalid_argument, "unknown config key '" + item.key() + "' in " + where);
  }
}

ApsmOverrides overrides_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"rho0", "growth", "mu", "beta", "beta_geom", "tau", "stop_eps"}, where);
  ApsmOverrides o;
  auto opt = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key) && !j.at(key).is_null()) dst = get_as<double>(j, key);
  };
  opt("rho0", o.rho0);
  opt("growth", o.growth);
  opt("mu", o.mu);
  opt("beta", o.beta);
  opt("beta_geom", o.beta_geom);
  opt("tau", o.tau);
  opt("stop_eps", o.stop_eps);
  return o;
}

json overrides_to_json(const ApsmOverrides& o) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("rho0", o.rho0);
  put("growth", o.growth);
  put("mu", o.mu);
  put("beta", o.beta);
  put("beta_geom", o.beta_geom);
  put("tau", o.tau);
  put("stop_eps", o.stop_eps);
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("config: ") + e.what());
  }
  reject_unknown(j,
                 {"k", "n", "modulation", "channel", "detectors", "snr_db", "trials", "iters", "seed", "workers",
                  "apsm", "apsm_overrides"},
                 "config");
  ExperimentConfig cfg;
  if (j.contains("k")) cfg.k = get_as<long>(j, "k");
  if (j.contains("n")) cfg.n = get_as<long>(j, "n");
  if (j.contains("modulation")) cfg.modulation = parse_modulation(get_as<std::string>(j, "modulation"));
  if (j.contains("channel")) {
    const json& c = j.at("channel");
    reject_unknown(c, {"kind", "rho_tx", "rho_rx"}, "channel");
    if (c.contains("kind")) cfg.channel.kind = parse_channel_kind(get_as<std::string>(c, "kind"));
    if (c.contains("rho_tx")) cfg.channel.rho_tx = get_as<double>(c, "rho_tx");
    if (c.contains("rho_rx")) cfg.channel.rho_rx = get_as<double>(c, "rho_rx");
  }
  if (j.contains("detectors")) {
    cfg.detectors.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "detectors")) cfg.detectors.push_back(parse_detector(name));
  }
  if (j.contains("snr_db")) {
    if (j.at("snr_db").is_number()) {
      cfg.snr_db = {get_as<double>(j, "snr_db")};
    } else {
      cfg.snr_db = get_as<std::vector<double>>(j, "snr_db");
    }
  }
  if (j.contains("trials")) cfg.trials = get_as<long>(j, "trials");
  if (j.contains("iters")) cfg.iters = get_as<long>(j, "iters");
  if (j.contains("seed")) cfg.master_seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("workers")) cfg.workers = get_as<unsigned>(j, "workers");
  if (j.contains("apsm")) cfg.apsm = overrides_from_json(j.at("apsm"), "apsm");
  if (j.contains("apsm_overrides")) {
    const json& per = j.at("apsm_overrides");
    if (!per.is_object()) fail(ErrorCode::invalid_argument, "apsm_overrides must be a JSON object");
    for (const auto& item : per.items()) {
      const DetectorKind kind = parse_detector(item.key());
      if (!is_apsm(kind)) fail(ErrorCode::invalid_argument, "apsm_overrides: '" + item.key() + "' is not an APSM detector");
      cfg.apsm_per_detector[kind] = overrides_from_json(item.value(), "apsm_overrides." + item.key());
    }
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  json j;
  j["k"] = cfg.k;
  j["n"] = cfg.n;
  j["modulation"] = std::string(to_string(cfg.modulation));
  j["channel"] = {{"kind", std::string(to_string(cfg.channel.kind))},
                  {"rho_tx", cfg.channel.rho_tx},
                  {"rho_rx", cfg.channel.rho_rx}};
  std::vector<std::string> names;
  for (DetectorKind d : cfg.detectors) names.emplace_back(to_string(d));
  j["detectors"] = names;
  j["snr_db"] = cfg.snr_db;
  j["trials"] = cfg.trials;
  j["iters"] = cfg.iters;
  j["seed"] = cfg.master_seed;
  j["workers"] = cfg.workers;
  j["apsm"] = overrides_to_json(cfg.apsm);
  json per = json::object();
  for (const auto& [kind, o] : cfg.apsm_per_detector) per[std::string(to_string(kind))] = overrides_to_json(o);
  j["apsm_overrides"] = per;
  return j.dump(indent);
}

std::string_view to_string(XKind k) { return k == XKind::iter ? "iter" : "snr_db"; }

double SerRow::standard_error() const {
  if (symbols <= 0) return 0.0;
  return std::sqrt(ser * (1.0 - ser) / static_cast<double>(symbols));
}

void SerTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const SerRow& a, const SerRow& b) {
    if (a.detector != b.detector) return a.detector < b.detector;
    return a.x_value < b.x_value;
  });
}

const SerRow* SerTable::find(std::string_view detector, double x_value) const {
  for (const auto& r : rows) {
    if (r.detector == detector && r.x_value == x_value) return &r;
  }
  return nullptr;
}

namespace {

/// Runs fn(trial) for every trial on up to `workers` threads. The exception
/// from the lowest failing trial index is rethrown.
template <class Fn>
void for_each_trial(long trials, unsigned workers, Fn&& fn) {
  std::atomic<long> next{0};
  std::mutex mu;
  long failed_trial = -1;
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const long t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard lock(mu);
        if (failed_trial < 0 || t < failed_trial) {
          failed_trial = t;
          failure = std::current_exception();
        }
      }
    }
  };
  const unsigned n = static_cast<unsigned>(std::min<long>(workers, trials));
  if (n <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<DetectorKind> sorted_detectors(const ExperimentConfig& cfg) {
  auto dets = cfg.detectors;
  std::sort(dets.begin(), dets.end(),
            [](DetectorKind a, DetectorKind b) { return to_string(a) < to_string(b); });
  return dets;
}

SerTable reduce(const std::vector<DetectorKind>& dets, const std::vector<double>& xs, XKind kind,
                long symbols_per_trial, const PerTrialErrors& per_trial) {
  SerTable table;
  const long trials = static_cast<long>(per_trial.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t x = 0; x < xs.size(); ++x) {
      const std::size_t idx = d * xs.size() + x;
      SerRow row;
      row.detector = std::string(to_string(dets[d]));
      row.x_kind = kind;
      row.x_value = xs[x];
      for (long t = 0; t < trials; ++t) row.errors += per_trial[static_cast<std::size_t>(t)][idx];
      row.symbols = symbols_per_trial * trials;
      row.ser = static_cast<double>(row.errors) / static_cast<double>(row.symbols);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace

SerTable run_ser_vs_iter(const ExperimentConfig& cfg, PerTrialErrors* per_trial_out) {
  cfg.validate();
  if (cfg.snr_db.size() != 1) fail(ErrorCode::invalid_argument, "ser-vs-iteration needs exactly one SNR value");
  if (cfg.iters < 1) fail(ErrorCode::invalid_argument, "ser-vs-iteration needs iters >= 1");

  const auto dets = sorted_detectors(cfg);
  const Constellation c = cfg.constellation();
  const double sigma2 = snr_to_sigma2(cfg.snr_db[0], cfg.n, cfg.k);
  std::vector<ApsmConfig> apsm_cfgs;
  for (DetectorKind d : dets) apsm_cfgs.push_back(is_apsm(d) ? cfg.apsm_config(d) : ApsmConfig{});
  const auto iters = static_cast<std::size_t>(cfg.iters);

  PerTrialErrors per_trial(static_cast<std::size_t>(cfg.trials));
  for_each_trial(cfg.trials, cfg.effective_workers(), [&](long t) {
    const ChannelInstance inst = draw_instance(cfg.channel, cfg.n, cfg.k, c, sigma2, cfg.trial_seed(t));
    std::vector<long> errs(dets.size() * iters, 0);
    for (std::size_t d = 0; d < dets.size(); ++d) {
      long* row = errs.data() + d * iters;
      if (is_apsm(dets[d])) {
        long last = 0;
        std::size_t filled = 0;
        auto observer = [&](long n, const Vector& x) {
          last = symbol_errors(x, inst.s, c);
          row[n - 1] = last;
          filled = static_cast<std::size_t>(n);
        };
        detect(dets[d], inst, c, apsm_cfgs[d], observer);
        for (std::size_t i = filled; i < iters; ++i) row[i] = last;
      } else {
        const Detection det = detect(dets[d], inst, c, apsm_cfgs[d]);
        std::fill(row, row + iters, symbol_errors(det.x_hat, inst.s, c));
      }
    }
    per_trial[static_cast<std::size_t>(t)] = std::move(errs);
  });

  std::vector<double> xs(iters);
  for (std::size_t i = 0; i < iters; ++i) xs[i] = static_cast<double>(i + 1);
  SerTable table = reduce(dets, xs, XKind::iter, cfg.k, per_trial);
  if (per_trial_out) *per_trial_out = std::move(per_trial);
  return table;
}

SerTable run_ser_vs_snr(const ExperimentConfig& cfg, PerTrialErrors* per_trial_out) {
  cfg.validate();
  const auto dets = sorted_detectors(cfg);
  const Constellation c = cfg.constellation();
  auto snrs = cfg.snr_db;
  std::sort(snrs.begin(), snrs.end());
  std::vector<ApsmConfig> apsm_cfgs;
  for (DetectorKind d : dets) apsm_cfgs.push_back(is_apsm(d) ? cfg.apsm_config(d) : ApsmConfig{});

  PerTrialErrors per_trial(static_cast<std::size_t>(cfg.trials));
  for_each_trial(cfg.trials, cfg.effective_workers(), [&](long t) {
    std::vector<long> errs(dets.size() * snrs.size(), 0);
    for (std::size_t s = 0; s < snrs.size(); ++s) {
      // Same channel, symbols and noise direction at every SNR of a trial.
      const double sigma2 = snr_to_sigma2(snrs[s], cfg.n, cfg.k);
      const ChannelInstance inst = draw_instance(cfg.channel, cfg.n, cfg.k, c, sigma2, cfg.trial_seed(t));
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const Detection det = detect(dets[d], inst, c, apsm_cfgs[d]);
        errs[d * snrs.size() + s] = symbol_errors(det.x_hat, inst.s, c);
      }
    }
    per_trial[static_cast<std::size_t>(t)] = std::move(errs);
  });

  SerTable table = reduce(dets, snrs, XKind::snr_db, cfg.k, per_trial);
  if (per_trial_out) *per_trial_out = std::move(per_trial);
  return table;
}

TableFormat parse_format(std::string_view name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "json") return TableFormat::json;
  fail(ErrorCode::invalid_argument, "unknown output format '" + std::string(name) + "'");
}

std::string table_to_csv(const SerTable& table, bool include_stderr) {
  SerTable sorted = table;
  sorted.sort();
  std::string out = include_stderr ? "detector,x_kind,x_value,errors,symbols,ser,stderr\n"
                                   : "detector,x_kind,x_value,errors,symbols,ser\n";
  char buf[256];
  for (const auto& r : sorted.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%ld,%ld,%.17g", r.detector.c_str(),
                  std::string(to_string(r.x_kind)).c_str(), r.x_value, r.errors, r.symbols, r.ser);
    out += buf;
    if (include_stderr) {
      std::snprintf(buf, sizeof buf, ",%.17g", r.standard_error());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string table_to_json(const SerTable& table) {
  SerTable sorted = table;
  sorted.sort();
  json rows = json::array();
  for (const auto& r : sorted.rows) {
    rows.push_back({{"detector", r.detector},
                    {"x_kind", std::string(to_string(r.x_kind))},
                    {"x_value", r.x_value},
                    {"errors", r.errors},
                    {"symbols", r.symbols},
                    {"ser", r.ser}});
  }
  return json{{"rows", rows}}.dump(2) + "\n";
}

SerTable table_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SerTable table;
    for (const auto& r : j.at("rows")) {
      SerRow row;
      row.detector = r.at("detector").get<std::string>();
      const auto kind = r.at("x_kind").get<std::string>();
      if (kind == "iter") {
        row.x_kind = XKind::iter;
      } else if (kind == "snr_db") {
        row.x_kind = XKind::snr_db;
      } else {
        fail(ErrorCode::parse_error, "table: unknown x_kind '" + kind + "'");
      }
      row.x_value = r.at("x_value").get<double>();
      row.errors = r.at("errors").get<long>();
      row.symbols = r.at("symbols").get<long>();
      row.ser = r.at("ser").get<double>();
      if (row.errors < 0 || row.errors > row.symbols) fail(ErrorCode::parse_error, "table: errors exceed symbols");
      table.rows.push_back(std::move(row));
    }
    return table;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("table: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) fail(ErrorCode::io_error, "write to '" + path + "' failed");
}

void emit(const SerTable& table, const std::string& path, TableFormat format, bool include_stderr) {
  write_file(path, format == TableFormat::csv ? table_to_csv(table, include_stderr) : table_to_json(table));
}

}  // namespace apsm
