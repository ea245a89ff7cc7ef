#include "apsm/apsm.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "detectors.hpp"
#include "engine.hpp"
#include "mimo.hpp"
#include "sim.hpp"
#include "validation.hpp"

struct apsm_experiment {
  apsm::ExperimentConfig cfg;
};

struct apsm_table {
  apsm::SerTable table;
  std::vector<std::string> kinds;
};

struct apsm_instance {
  apsm::ChannelInstance inst;
};

struct apsm_detection {
  apsm::ChannelInstance inst;
  apsm::Constellation constellation;
  apsm::ApsmConfig cfg;
  apsm::Detection det;
};

namespace {

thread_local std::string g_last_error;

apsm_status to_status(apsm::ErrorCode code) {
  using apsm::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return APSM_ERR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return APSM_ERR_DIMENSION;
    case ErrorCode::non_finite: return APSM_ERR_NON_FINITE;
    case ErrorCode::budget_exceeded: return APSM_ERR_BUDGET;
    case ErrorCode::solver_failure: return APSM_ERR_SOLVER;
    case ErrorCode::io_error: return APSM_ERR_IO;
    case ErrorCode::parse_error: return APSM_ERR_PARSE;
  }
  return APSM_ERR_INTERNAL;
}

apsm_status set_error(apsm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
apsm_status guarded(Fn&& fn) {
  try {
    fn();
    return APSM_OK;
  } catch (const apsm::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(APSM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(APSM_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(APSM_ERR_INTERNAL, "unknown error");
  }
}

apsm_status null_arg(const char* name) {
  return set_error(APSM_ERR_INVALID_ARGUMENT, std::string("null argument: ") + name);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

apsm_table* wrap(apsm::SerTable table) {
  auto* t = new apsm_table{std::move(table), {}};
  t->table.sort();
  for (const auto& r : t->table.rows) t->kinds.emplace_back(apsm::to_string(r.x_kind));
  return t;
}

}  // namespace

extern "C" {

const char* apsm_version(void) { return "0.1.0"; }

const char* apsm_status_string(apsm_status status) {
  switch (status) {
    case APSM_OK: return "ok";
    case APSM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case APSM_ERR_DIMENSION: return "dimension_mismatch";
    case APSM_ERR_NON_FINITE: return "non_finite";
    case APSM_ERR_BUDGET: return "budget_exceeded";
    case APSM_ERR_SOLVER: return "solver_failure";
    case APSM_ERR_IO: return "io_error";
    case APSM_ERR_PARSE: return "parse_error";
    case APSM_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* apsm_last_error(void) { return g_last_error.c_str(); }

void apsm_string_free(char* str) { delete[] str; }

apsm_status apsm_experiment_create(const char* config_json, apsm_experiment** out) {
  if (!config_json) return null_arg("config_json");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = apsm::config_from_json(config_json);
    cfg.validate();
    *out = new apsm_experiment{std::move(cfg)};
  });
}

void apsm_experiment_free(apsm_experiment* exp) { delete exp; }

apsm_status apsm_experiment_to_json(const apsm_experiment* exp, char** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  return guarded([&] { *out = dup_string(apsm::config_to_json(exp->cfg)); });
}

apsm_status apsm_experiment_set_workers(apsm_experiment* exp, unsigned workers) {
  if (!exp) return null_arg("exp");
  exp->cfg.workers = workers;
  return APSM_OK;
}

apsm_status apsm_run_ser_vs_iter(const apsm_experiment* exp, apsm_table** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = wrap(apsm::run_ser_vs_iter(exp->cfg)); });
}

apsm_status apsm_run_ser_vs_snr(const apsm_experiment* exp, apsm_table** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = wrap(apsm::run_ser_vs_snr(exp->cfg)); });
}

size_t apsm_table_size(const apsm_table* table) { return table ? table->table.rows.size() : 0; }

apsm_status apsm_table_get_row(const apsm_table* table, size_t index, apsm_table_row* out) {
  if (!table) return null_arg("table");
  if (!out) return null_arg("out");
  if (index >= table->table.rows.size()) {
    return set_error(APSM_ERR_INVALID_ARGUMENT, "row index " + std::to_string(index) + " out of range");
  }
  const auto& r = table->table.rows[index];
  out->detector = r.detector.c_str();
  out->x_kind = table->kinds[index].c_str();
  out->x_value = r.x_value;
  out->errors = r.errors;
  out->symbols = r.symbols;
  out->ser = r.ser;
  return APSM_OK;
}

apsm_status apsm_table_to_string(const apsm_table* table, apsm_format format, int include_stderr, char** out) {
  if (!table) return null_arg("table");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(format == APSM_FORMAT_JSON ? apsm::table_to_json(table->table)
                                                 : apsm::table_to_csv(table->table, include_stderr != 0));
  });
}

apsm_status apsm_table_write(const apsm_table* table, const char* path, apsm_format format, int include_stderr) {
  if (!table) return null_arg("table");
  if (!path) return null_arg("path");
  return guarded([&] {
    apsm::emit(table->table, path, format == APSM_FORMAT_JSON ? apsm::TableFormat::json : apsm::TableFormat::csv,
               include_stderr != 0);
  });
}

apsm_status apsm_table_read_json(const char* path, apsm_table** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = wrap(apsm::table_from_json(apsm::read_file(path))); });
}

void apsm_table_free(apsm_table* table) { delete table; }

apsm_status apsm_instance_generate(const apsm_experiment* exp, uint64_t trial, double snr_db, apsm_instance** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto& cfg = exp->cfg;
    const double sigma2 = apsm::snr_to_sigma2(snr_db, cfg.n, cfg.k);
    *out = new apsm_instance{apsm::draw_instance(cfg.channel, cfg.n, cfg.k, cfg.constellation(), sigma2,
                                                 cfg.trial_seed(static_cast<long>(trial)))};
  });
}

apsm_status apsm_instance_load_json(const char* path, apsm_instance** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new apsm_instance{apsm::instance_from_json(apsm::read_file(path))}; });
}

apsm_status apsm_instance_save_json(const apsm_instance* inst, const char* path) {
  if (!inst) return null_arg("inst");
  if (!path) return null_arg("path");
  return guarded([&] { apsm::write_file(path, apsm::instance_to_json(inst->inst) + "\n"); });
}

apsm_status apsm_instance_dims(const apsm_instance* inst, size_t* n_rx, size_t* k_tx) {
  if (!inst) return null_arg("inst");
  if (n_rx) *n_rx = static_cast<size_t>(inst->inst.n_rx());
  if (k_tx) *k_tx = static_cast<size_t>(inst->inst.k_tx());
  return APSM_OK;
}

apsm_status apsm_instance_transmit(const apsm_instance* inst, const double** data, size_t* len) {
  if (!inst) return null_arg("inst");
  if (!data || !len) return null_arg("data/len");
  *data = inst->inst.s.data();
  *len = static_cast<size_t>(inst->inst.s.size());
  return APSM_OK;
}

void apsm_instance_free(apsm_instance* inst) { delete inst; }

apsm_status apsm_detect(const apsm_experiment* exp, const apsm_instance* inst, const char* detector,
                        int record_iterates, apsm_detection** out) {
  if (!exp) return null_arg("exp");
  if (!inst) return null_arg("inst");
  if (!detector) return null_arg("detector");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto kind = apsm::parse_detector(detector);
    const auto c = exp->cfg.constellation();
    if (inst->inst.k_tx() * 2 != inst->inst.s.size()) {
      apsm::fail(apsm::ErrorCode::dimension_mismatch, "instance transmit vector inconsistent with channel");
    }
    apsm::ApsmConfig cfg = apsm::is_apsm(kind) ? exp->cfg.apsm_config(kind) : apsm::ApsmConfig{};
    cfg.record_iterates = record_iterates != 0;
    auto det = apsm::detect(kind, inst->inst, c, cfg);
    *out = new apsm_detection{inst->inst, c, cfg, std::move(det)};
  });
}

apsm_status apsm_detection_estimate(const apsm_detection* det, const double** data, size_t* len) {
  if (!det) return null_arg("det");
  if (!data || !len) return null_arg("data/len");
  *data = det->det.x_hat.data();
  *len = static_cast<size_t>(det->det.x_hat.size());
  return APSM_OK;
}

apsm_status apsm_detection_symbol_errors(const apsm_detection* det, int64_t* out) {
  if (!det) return null_arg("det");
  if (!out) return null_arg("out");
  return guarded([&] { *out = apsm::symbol_errors(det->det.x_hat, det->inst.s, det->constellation); });
}

apsm_status apsm_detection_objective(const apsm_detection* det, double* out) {
  if (!det) return null_arg("det");
  if (!out) return null_arg("out");
  *out = (det->inst.h * det->det.x_hat - det->inst.y).squaredNorm();
  return APSM_OK;
}

int apsm_detection_has_trace(const apsm_detection* det) { return det && det->det.trace.has_value() ? 1 : 0; }

apsm_status apsm_detection_write_trace_csv(const apsm_detection* det, const char* path) {
  if (!det) return null_arg("det");
  if (!path) return null_arg("path");
  if (!det->det.trace) return set_error(APSM_ERR_INVALID_ARGUMENT, "detector produced no iterate trace");
  return guarded([&] {
    std::ostringstream os;
    apsm::write_trace_csv(os, *det->det.trace);
    apsm::write_file(path, os.str());
  });
}

apsm_status apsm_detection_report_json(const apsm_detection* det, char** out) {
  if (!det) return null_arg("det");
  if (!out) return null_arg("out");
  if (!det->det.trace) return set_error(APSM_ERR_INVALID_ARGUMENT, "detector produced no iterate trace");
  if (det->det.trace->iterates.empty()) {
    return set_error(APSM_ERR_INVALID_ARGUMENT, "diagnostic report needs a detection run with record_iterates");
  }
  return guarded([&] {
    const apsm::QuadraticResidualCost cost(det->inst.h, det->inst.y);
    const auto report = apsm::diagnose(*det->det.trace, det->inst.s, cost, det->cfg);
    *out = dup_string(apsm::report_to_json(report, *det->det.trace));
  });
}

void apsm_detection_free(apsm_detection* det) { delete det; }

apsm_status apsm_validate(uint64_t seed, long scale, apsm_suite_result* results, size_t capacity, size_t* count) {
  if (!count) return null_arg("count");
  if (capacity > 0 && !results) return null_arg("results");
  return guarded([&] {
    const auto suites = apsm::run_validation(seed, scale);
    *count = suites.size();
    for (size_t i = 0; i < suites.size() && i < capacity; ++i) {
      const auto& s = suites[i];
      const char* name = s.name == "quasi_fejer" ? "quasi_fejer" : s.name == "attracting" ? "attracting" : "prox_oracle";
      results[i] = apsm_suite_result{name, s.checks, s.failures, s.max_excess};
    }
  });
}

}  // extern "C"
