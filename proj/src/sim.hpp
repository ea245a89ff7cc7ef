#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cost.hpp"
#include "detectors.hpp"
#include "geometry.hpp"
#include "mimo.hpp"

namespace apsm {

/// Parameter overrides for APSM detectors. Unset fields keep the defaults.
struct ApsmOverrides {
  std::optional<double> rho0;
  std::optional<double> growth;
  std::optional<double> mu;
  std::optional<double> beta;       // constant beta_n
  std::optional<double> beta_geom;  // beta_n = b^n
  std::optional<double> tau;
  std::optional<double> stop_eps;

  void apply(ApsmConfig& cfg) const;
};

struct ExperimentConfig {
  long k = 16;
  long n = 64;
  Modulation modulation = Modulation::qam16;
  ChannelModel channel;
  std::vector<DetectorKind> detectors{DetectorKind::apsm_plain, DetectorKind::apsm_l2, DetectorKind::apsm_l1,
                                      DetectorKind::constrained_lmmse};
  std::vector<double> snr_db{9.0};
  long trials = 100;
  long iters = 300;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  ApsmOverrides apsm;
  std::map<DetectorKind, ApsmOverrides> apsm_per_detector;

  /// Throws invalid_argument (or budget_exceeded for an oversized ML search).
  void validate() const;
  /// Effective APSM parameters for one detector.
  ApsmConfig apsm_config(DetectorKind kind) const;
  Constellation constellation() const { return Constellation::from_modulation(modulation); }
  std::uint64_t trial_seed(long trial) const { return mix_seed(master_seed, static_cast<std::uint64_t>(trial)); }
  unsigned effective_workers() const;
};

/// Parses a JSON object; missing keys keep their defaults, unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

enum class XKind { iter, snr_db };
std::string_view to_string(XKind k);

struct SerRow {
  std::string detector;
  XKind x_kind = XKind::iter;
  double x_value = 0.0;
  long errors = 0;
  long symbols = 0;
  double ser = 0.0;

  bool operator==(const SerRow&) const = default;
  double standard_error() const;
};

struct SerTable {
  std::vector<SerRow> rows;

  /// Orders rows by detector name, then x_value.
  void sort();
  const SerRow* find(std::string_view detector, double x_value) const;
  bool operator==(const SerTable&) const = default;
};

/// errors[trial][row] for the rows of the returned table, in table order.
using PerTrialErrors = std::vector<std::vector<long>>;

SerTable run_ser_vs_iter(const ExperimentConfig& cfg, PerTrialErrors* per_trial = nullptr);
SerTable run_ser_vs_snr(const ExperimentConfig& cfg, PerTrialErrors* per_trial = nullptr);

enum class TableFormat { csv, json };
TableFormat parse_format(std::string_view name);

std::string table_to_csv(const SerTable& table, bool include_stderr = false);
std::string table_to_json(const SerTable& table);
SerTable table_from_json(const std::string& text);
void emit(const SerTable& table, const std::string& path, TableFormat format, bool include_stderr = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace apsm
