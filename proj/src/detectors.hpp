#pragma once

#include <optional>
#include <string_view>

#include "common.hpp"
#include "cost.hpp"
#include "engine.hpp"
#include "geometry.hpp"
#include "mimo.hpp"

namespace apsm {

enum class DetectorKind { apsm_plain, apsm_l2, apsm_l1, lmmse, constrained_lmmse, box_oracle, ml_bruteforce };

DetectorKind parse_detector(std::string_view name);
std::string_view to_string(DetectorKind k);
bool is_apsm(DetectorKind k);
Variant variant_of(DetectorKind k);

inline constexpr double kMlCandidateBudget = 1e6;

struct BoxOracleOptions {
  double tol = 1e-10;
  long max_iters = 200000;
};

struct BoxOracleResult {
  Vector x;
  bool converged = false;
  long iterations = 0;
  double lipschitz = 0.0;  // L = 2 lambda_max(H^T H)
};

struct Detection {
  Vector x_hat;
  std::optional<IterateTrace> trace;
  bool converged = true;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_lambda_max(const Matrix& a, int max_iters = 10000, double rel_tol = 1e-13);

Vector detect_lmmse(const ChannelInstance& inst);
Vector detect_constrained_lmmse(const ChannelInstance& inst);
/// Per-column bias correction alpha_k = 1 / (h_k^T (H H^T + sigma^2 I)^{-1} h_k).
Vector constrained_lmmse_alpha(const ChannelInstance& inst);
BoxOracleResult detect_box_oracle(const ChannelInstance& inst, const BoxSet& box,
                                  const BoxOracleOptions& opts = {});
/// ||x - P_B(x - grad/L)||, the first-order optimality residual of the box problem.
double box_first_order_residual(const ChannelInstance& inst, const BoxSet& box, const Vector& x,
                                double lipschitz);
Vector detect_ml_bruteforce(const ChannelInstance& inst, const Constellation& c);
double ml_candidate_count(const Constellation& c, Eigen::Index k);

/// `cfg` supplies the APSM parameters; its variant is replaced by the one
/// implied by `kind`. The observer sees every APSM iterate.
Detection detect(DetectorKind kind, const ChannelInstance& inst, const Constellation& c,
                 const ApsmConfig& cfg, const IterateObserver& observer = {});

}  // namespace apsm
