#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace apsm {

namespace {

void check_finite(const Vector& v, long n, const char* what) {
  if (!v.allFinite()) {
    fail(ErrorCode::non_finite, std::string("non-finite ") + what + " at iteration " + std::to_string(n));
  }
}

Vector perturbation(const ApsmConfig& cfg, const Constellation& c, const Vector& x) {
  switch (cfg.variant) {
    case Variant::plain: return Vector::Zero(x.size());
    case Variant::l2: return perturbation_l2(x, c);
    case Variant::l1: return perturbation_l1(x, cfg.tau, c);
  }
  return Vector::Zero(x.size());
}

double mean_step(const std::vector<IterateRecord>& r, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += r[i].step_norm;
  return acc / static_cast<double>(end - begin);
}

void require_iterates(const IterateTrace& trace, const std::vector<Vector>& x_seq) {
  if (x_seq.size() != trace.records.size() + 1) {
    fail(ErrorCode::invalid_argument,
         "audit needs x_0..x_final (" + std::to_string(trace.records.size() + 1) + " iterates), got " +
             std::to_string(x_seq.size()));
  }
}

}  // namespace

ApsmResult apsm_run(const QuadraticResidualCost& cost, const ApsmConfig& cfg, const Constellation& c,
                    const Vector& x0, const IterateObserver& observer) {
  cfg.validate();
  require_same_size(x0.size(), cost.cols(), "initial iterate length");
  check_finite(x0, 0, "initial iterate");

  const BoxSet box(c.a_max());
  ApsmResult out;
  IterateTrace& trace = out.trace;
  trace.variant = cfg.variant;
  trace.config_hash = cfg.hash();
  trace.summable = cfg.variant == Variant::plain || cfg.beta.summable();
  trace.records.reserve(static_cast<std::size_t>(cfg.max_iters));
  if (cfg.record_iterates) trace.iterates.push_back(x0);

  Vector x = x0;
  Vector g;
  for (long n = 0; n < cfg.max_iters; ++n) {
    IterateRecord rec;
    rec.n = n;
    rec.rho = cfg.rho.at(n);

    const double beta = cfg.variant == Variant::plain ? 0.0 : cfg.beta.at(n);
    Vector z = x;
    if (beta != 0.0) {
      const Vector v = perturbation(cfg, c, x);
      z += beta * v;
      rec.pert_norm = beta * v.norm();
    }

    double obj_z = 0.0;
    cost.evaluate(z, obj_z, g);
    if (!std::isfinite(obj_z)) fail(ErrorCode::non_finite, "non-finite objective at iteration " + std::to_string(n));
    rec.objective = beta != 0.0 ? cost.objective(x) : obj_z;
    const double theta = std::max(obj_z - rec.rho, 0.0);
    rec.theta_at_z = theta;

    Vector next;
    const double gg = g.squaredNorm();
    if (theta > 0.0 && std::sqrt(gg) > zero_subgradient_tol(z.norm())) {
      next = project_box(z - (cfg.mu * theta / gg) * g, box);
    } else {
      next = project_box(z, box);
    }
    check_finite(next, n, "iterate");

    rec.step_norm = (next - x).norm();
    trace.records.push_back(rec);
    x = std::move(next);
    if (cfg.record_iterates) trace.iterates.push_back(x);
    if (observer) observer(n + 1, x);
    if (cfg.stop_eps > 0.0 && rec.step_norm <= cfg.stop_eps) break;
  }

  trace.final_objective = cost.objective(x);
  out.x = std::move(x);
  return out;
}

std::optional<long> activation_index(const IterateTrace& trace, const QuadraticResidualCost& cost,
                                     const Vector& z_ref) {
  require_same_size(z_ref.size(), cost.cols(), "reference point length");
  const double ref = (cost.h() * z_ref - cost.y()).squaredNorm();
  for (const auto& r : trace.records) {
    if (r.rho >= ref) return r.n;
  }
  return std::nullopt;
}

AuditResult check_quasi_fejer(const IterateTrace& trace, const std::vector<Vector>& x_seq,
                              const Vector& z_ref, const QuadraticResidualCost& cost,
                              const ApsmConfig& cfg) {
  (void)cfg;
  require_iterates(trace, x_seq);
  AuditResult res;
  res.max_excess = -std::numeric_limits<double>::infinity();
  const auto start = activation_index(trace, cost, z_ref);
  if (!start) return res;
  for (std::size_t i = static_cast<std::size_t>(*start); i < trace.records.size(); ++i) {
    const double lhs = (x_seq[i + 1] - z_ref).norm();
    const double rhs = (x_seq[i] - z_ref).norm() + trace.records[i].pert_norm;
    const double excess = lhs - rhs;
    ++res.checked;
    res.max_excess = std::max(res.max_excess, excess);
    if (excess > kAuditSlack) ++res.violations;
  }
  return res;
}

AuditResult check_attracting(const IterateTrace& trace, const std::vector<Vector>& x_seq,
                             const Vector& z_ref, const QuadraticResidualCost& cost,
                             const ApsmConfig& cfg) {
  require_iterates(trace, x_seq);
  AuditResult res;
  res.max_excess = -std::numeric_limits<double>::infinity();
  const auto start = activation_index(trace, cost, z_ref);
  if (!start) return res;
  const double kappa = 1.0 - cfg.mu / 2.0;
  for (std::size_t i = static_cast<std::size_t>(*start); i < trace.records.size(); ++i) {
    const double dist = (x_seq[i] - z_ref).norm();
    const double step = (x_seq[i + 1] - x_seq[i]).norm();
    const double p = trace.records[i].pert_norm;
    const double gamma = 2.0 * p * (dist + kappa * step) + p * p;
    const double lhs = (x_seq[i + 1] - z_ref).squaredNorm();
    const double rhs = dist * dist - kappa * step * step + gamma;
    const double excess = lhs - rhs;
    ++res.checked;
    res.max_excess = std::max(res.max_excess, excess);
    if (excess > kAuditSlack) ++res.violations;
  }
  return res;
}

DiagnosticReport diagnose(const IterateTrace& trace, const Vector& z_ref, const QuadraticResidualCost& cost,
                          const ApsmConfig& cfg) {
  const auto& x_seq = trace.iterates;
  require_iterates(trace, x_seq);

  DiagnosticReport rep;
  rep.iterations = trace.records.size();
  rep.summable = trace.summable;
  rep.kappa = 1.0 - cfg.mu / 2.0;
  rep.activation_index = activation_index(trace, cost, z_ref);
  rep.quasi_fejer = check_quasi_fejer(trace, x_seq, z_ref, cost, cfg);
  rep.attracting = check_attracting(trace, x_seq, z_ref, cost, cfg);

  if (rep.activation_index) {
    const auto a = static_cast<std::size_t>(*rep.activation_index);
    double bound = (x_seq[a] - z_ref).squaredNorm();
    double sum = 0.0;
    for (std::size_t i = a; i < trace.records.size(); ++i) {
      const double step = trace.records[i].step_norm;
      const double p = trace.records[i].pert_norm;
      sum += rep.kappa * step * step;
      bound += 2.0 * p * ((x_seq[i] - z_ref).norm() + rep.kappa * step) + p * p;
    }
    rep.attracting_step_sum = sum;
    rep.attracting_step_bound = bound;
  }

  const std::size_t m = trace.records.size();
  if (m > 0) {
    const std::size_t tail = std::max<std::size_t>(1, m / 10);
    double acc = 0.0;
    for (std::size_t i = m - tail; i < m; ++i) acc += trace.records[i].theta_at_z;
    rep.theta_tail = acc / static_cast<double>(tail);
    rep.first_decile_step = mean_step(trace.records, 0, tail);
    rep.last_decile_step = mean_step(trace.records, m - tail, m);
  }
  return rep;
}

void write_trace_csv(std::ostream& os, const IterateTrace& trace) {
  os << "n,theta,objective,rho,step_norm,pert_norm\n";
  char buf[256];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.n, r.theta_at_z, r.objective,
                  r.rho, r.step_norm, r.pert_norm);
    os << buf;
  }
}

namespace {

nlohmann::json audit_json(const AuditResult& a) {
  nlohmann::json j = {{"checked", a.checked}, {"violations", a.violations}};
  j["max_excess"] = a.checked > 0 ? nlohmann::json(a.max_excess) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string report_to_json(const DiagnosticReport& report, const IterateTrace& trace, int indent) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(trace.variant));
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(trace.config_hash));
  j["config_hash"] = hash;
  j["summable"] = report.summable;
  if (!report.summable) j["warning"] = "beta schedule not summable: convergence guarantee void";
  j["iterations"] = report.iterations;
  j["activation_index"] =
      report.activation_index ? nlohmann::json(*report.activation_index) : nlohmann::json(nullptr);
  j["kappa"] = report.kappa;
  j["quasi_fejer"] = audit_json(report.quasi_fejer);
  j["attracting"] = audit_json(report.attracting);
  j["attracting_step_sum"] = report.attracting_step_sum;
  j["attracting_step_bound"] = report.attracting_step_bound;
  j["theta_tail"] = report.theta_tail;
  j["first_decile_step"] = report.first_decile_step;
  j["last_decile_step"] = report.last_decile_step;
  j["final_objective"] = trace.final_objective;
  return j.dump(indent);
}

}  // namespace apsm
