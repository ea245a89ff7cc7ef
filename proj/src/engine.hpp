#pragma once

// Perturbed APSM iteration x_{n+1} = T_n(x_n + beta_n v_n) with per-iteration
// trace recording and runtime audits of the Fejer-type inequalities the
// iteration is expected to satisfy.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "cost.hpp"
#include "geometry.hpp"

namespace apsm {

struct IterateRecord {
  long n = 0;
  double theta_at_z = 0.0;  // Theta_n(z_n), z_n = x_n + beta_n v_n
  double step_norm = 0.0;   // ||x_{n+1} - x_n||
  double pert_norm = 0.0;   // beta_n ||v_n||
  double objective = 0.0;   // ||H x_n - y||^2
  double rho = 0.0;
};

struct IterateTrace {
  std::vector<IterateRecord> records;
  Variant variant = Variant::plain;
  std::uint64_t config_hash = 0;
  /// False when the beta schedule is not summable; the convergence guarantee
  /// for perturbed iterations then does not apply.
  bool summable = true;
  double final_objective = 0.0;
  /// x_0 .. x_final, only filled when ApsmConfig::record_iterates is set.
  std::vector<Vector> iterates;
};

struct ApsmResult {
  Vector x;
  IterateTrace trace;
};

/// Called with (n, x_n) for every produced iterate, n >= 1.
using IterateObserver = std::function<void(long, const Vector&)>;

ApsmResult apsm_run(const QuadraticResidualCost& cost, const ApsmConfig& cfg, const Constellation& c,
                    const Vector& x0, const IterateObserver& observer = {});

/// Result of auditing one inequality over the active window of a trace.
struct AuditResult {
  long checked = 0;
  long violations = 0;
  double max_excess = 0.0;  // largest lhs - rhs observed (may be negative)
};

struct DiagnosticReport {
  std::optional<long> activation_index;
  AuditResult quasi_fejer;
  AuditResult attracting;
  double kappa = 0.0;
  /// sum_n kappa ||x_{n+1}-x_n||^2 over the window and its bound ||x_a - z||^2 + sum_n gamma_n.
  double attracting_step_sum = 0.0;
  double attracting_step_bound = 0.0;
  double theta_tail = 0.0;
  double first_decile_step = 0.0;
  double last_decile_step = 0.0;
  bool summable = true;
  std::size_t iterations = 0;
};

inline constexpr double kAuditSlack = 1e-9;

/// First n with rho_n >= ||H z - y||^2, if any.
std::optional<long> activation_index(const IterateTrace& trace, const QuadraticResidualCost& cost,
                                     const Vector& z_ref);

/// ||x_{n+1} - z|| <= ||x_n - z|| + beta_n ||v_n|| on every active iteration.
AuditResult check_quasi_fejer(const IterateTrace& trace, const std::vector<Vector>& x_seq,
                              const Vector& z_ref, const QuadraticResidualCost& cost,
                              const ApsmConfig& cfg);

/// ||x_{n+1} - z||^2 <= ||x_n - z||^2 - kappa ||x_{n+1} - x_n||^2 + gamma_n with
/// kappa = 1 - mu/2 and gamma_n = 2 p_n (||x_n - z|| + kappa ||x_{n+1} - x_n||) + p_n^2,
/// p_n = beta_n ||v_n||.
AuditResult check_attracting(const IterateTrace& trace, const std::vector<Vector>& x_seq,
                             const Vector& z_ref, const QuadraticResidualCost& cost,
                             const ApsmConfig& cfg);

/// Full report; needs a trace recorded with record_iterates.
DiagnosticReport diagnose(const IterateTrace& trace, const Vector& z_ref, const QuadraticResidualCost& cost,
                          const ApsmConfig& cfg);

void write_trace_csv(std::ostream& os, const IterateTrace& trace);
std::string report_to_json(const DiagnosticReport& report, const IterateTrace& trace, int indent = 2);

}  // namespace apsm
