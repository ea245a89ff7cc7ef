#include "detectors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace apsm {

DetectorKind parse_detector(std::string_view name) {
  if (name == "apsm_plain" || name == "apsm") return DetectorKind::apsm_plain;
  if (name == "apsm_l2") return DetectorKind::apsm_l2;
  if (name == "apsm_l1") return DetectorKind::apsm_l1;
  if (name == "lmmse") return DetectorKind::lmmse;
  if (name == "constrained_lmmse") return DetectorKind::constrained_lmmse;
  if (name == "box_oracle") return DetectorKind::box_oracle;
  if (name == "ml_bruteforce") return DetectorKind::ml_bruteforce;
  fail(ErrorCode::invalid_argument, "unknown detector '" + std::string(name) + "'");
}

std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::apsm_plain: return "apsm_plain";
    case DetectorKind::apsm_l2: return "apsm_l2";
    case DetectorKind::apsm_l1: return "apsm_l1";
    case DetectorKind::lmmse: return "lmmse";
    case DetectorKind::constrained_lmmse: return "constrained_lmmse";
    case DetectorKind::box_oracle: return "box_oracle";
    case DetectorKind::ml_bruteforce: return "ml_bruteforce";
  }
  return "apsm_plain";
}

bool is_apsm(DetectorKind k) {
  return k == DetectorKind::apsm_plain || k == DetectorKind::apsm_l2 || k == DetectorKind::apsm_l1;
}

Variant variant_of(DetectorKind k) {
  switch (k) {
    case DetectorKind::apsm_l2: return Variant::l2;
    case DetectorKind::apsm_l1: return Variant::l1;
    default: return Variant::plain;
  }
}

double power_iteration_lambda_max(const Matrix& a, int max_iters, double rel_tol) {
  if (a.rows() == 0) return 0.0;
  Vector v = Vector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector av = a * v;
    const double norm = av.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(av);
    v = av / norm;
    if (std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

namespace {

Eigen::LLT<Matrix> regularized_gram(const ChannelInstance& inst) {
  inst.validate();
  Matrix a = inst.h.transpose() * inst.h;
  a.diagonal().array() += inst.sigma2;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::solver_failure, "H^T H + sigma^2 I is not positive definite to machine precision");
  }
  return llt;
}

void require_finite(const Vector& v, const char* who) {
  if (!v.allFinite()) fail(ErrorCode::solver_failure, std::string(who) + ": non-finite solution");
}

}  // namespace

Vector detect_lmmse(const ChannelInstance& inst) {
  const auto llt = regularized_gram(inst);
  Vector x = llt.solve(inst.h.transpose() * inst.y);
  require_finite(x, "lmmse");
  return x;
}

Vector constrained_lmmse_alpha(const ChannelInstance& inst) {
  // h_k^T (HH^T + s I)^{-1} h_k = [I - s (H^T H + s I)^{-1}]_kk
  const auto llt = regularized_gram(inst);
  const Eigen::Index m = inst.h.cols();
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(m, m));
  const Vector inv_diag = l_inv.colwise().squaredNorm().transpose();
  Vector alpha(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double q = 1.0 - inst.sigma2 * inv_diag[k];
    if (!(q > 0.0)) fail(ErrorCode::solver_failure, "constrained lmmse: degenerate column " + std::to_string(k));
    alpha[k] = 1.0 / q;
  }
  return alpha;
}

Vector detect_constrained_lmmse(const ChannelInstance& inst) {
  Vector x = constrained_lmmse_alpha(inst).cwiseProduct(detect_lmmse(inst));
  require_finite(x, "constrained lmmse");
  return x;
}

double box_first_order_residual(const ChannelInstance& inst, const BoxSet& box, const Vector& x,
                                double lipschitz) {
  const Vector grad = 2.0 * inst.h.transpose() * (inst.h * x - inst.y);
  return (x - project_box(x - grad / lipschitz, box)).norm();
}

BoxOracleResult detect_box_oracle(const ChannelInstance& inst, const BoxSet& box, const BoxOracleOptions& opts) {
  inst.validate();
  if (!(opts.tol > 0.0)) fail(ErrorCode::invalid_argument, "box oracle tolerance must be positive");
  const Matrix gram = inst.h.transpose() * inst.h;
  const Vector hty = inst.h.transpose() * inst.y;

  BoxOracleResult res;
  res.lipschitz = 2.0 * power_iteration_lambda_max(gram);
  res.x = Vector::Zero(inst.h.cols());
  if (res.lipschitz == 0.0) {
    res.converged = true;
    return res;
  }
  const double step = 1.0 / res.lipschitz;
  for (long it = 0; it < opts.max_iters; ++it) {
    Vector next = project_box(res.x - step * 2.0 * (gram * res.x - hty), box);
    const double delta = (next - res.x).norm();
    res.x = std::move(next);
    res.iterations = it + 1;
    if (delta <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double ml_candidate_count(const Constellation& c, Eigen::Index k) {
  return std::pow(static_cast<double>(c.size()), static_cast<double>(2 * k));
}

Vector detect_ml_bruteforce(const ChannelInstance& inst, const Constellation& c) {
  inst.validate();
  const Eigen::Index dim = inst.h.cols();
  const double count = ml_candidate_count(c, dim / 2);
  if (count > kMlCandidateBudget) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.0f", count);
    fail(ErrorCode::budget_exceeded,
         std::string("ml_bruteforce refused: ") + buf + " candidates exceed budget of 1000000");
  }
  const auto& levels = c.levels();
  const std::size_t m = levels.size();
  std::vector<std::size_t> digit(static_cast<std::size_t>(dim), 0);
  Vector cand(dim);
  for (Eigen::Index i = 0; i < dim; ++i) cand[i] = levels[0];

  Vector best = cand;
  double best_obj = std::numeric_limits<double>::infinity();
  for (;;) {
    const double obj = (inst.h * cand - inst.y).squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = cand;
    }
    // Odometer: last coordinate varies fastest.
    Eigen::Index pos = dim - 1;
    while (pos >= 0) {
      auto& d = digit[static_cast<std::size_t>(pos)];
      if (++d < m) {
        cand[pos] = levels[d];
        break;
      }
      d = 0;
      cand[pos] = levels[0];
      --pos;
    }
    if (pos < 0) break;
  }
  return best;
}

Detection detect(DetectorKind kind, const ChannelInstance& inst, const Constellation& c, const ApsmConfig& cfg,
                 const IterateObserver& observer) {
  inst.validate();
  Detection det;
  switch (kind) {
    case DetectorKind::apsm_plain:
    case DetectorKind::apsm_l2:
    case DetectorKind::apsm_l1: {
      ApsmConfig run_cfg = cfg;
      run_cfg.variant = variant_of(kind);
      const QuadraticResidualCost cost(inst.h, inst.y);
      auto res = apsm_run(cost, run_cfg, c, Vector::Zero(inst.h.cols()), observer);
      det.x_hat = std::move(res.x);
      det.trace = std::move(res.trace);
      break;
    }
    case DetectorKind::lmmse: det.x_hat = detect_lmmse(inst); break;
    case DetectorKind::constrained_lmmse: det.x_hat = detect_constrained_lmmse(inst); break;
    case DetectorKind::box_oracle: {
      auto res = detect_box_oracle(inst, BoxSet(c.a_max()));
      det.x_hat = std::move(res.x);
      det.converged = res.converged;
      break;
    }
    case DetectorKind::ml_bruteforce: det.x_hat = detect_ml_bruteforce(inst, c); break;
  }
  return det;
}

}  // namespace apsm
