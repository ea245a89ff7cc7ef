#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "common.hpp"
#include "geometry.hpp"

namespace apsm {

/// Theta(x) = (||Hx - y||^2 - rho)_+ for a fixed (H, y); rho varies per iteration.
class QuadraticResidualCost {
 public:
  QuadraticResidualCost(Matrix h, Vector y, bool cache_gram = true);

  const Matrix& h() const { return h_; }
  const Vector& y() const { return y_; }
  Eigen::Index rows() const { return h_.rows(); }
  Eigen::Index cols() const { return h_.cols(); }
  bool has_gram() const { return gram_.has_value(); }
  /// H^T H, computed on demand when not cached.
  Matrix gram() const;
  Vector hty() const;

  /// ||Hx - y||^2.
  double objective(const Vector& x) const;
  double theta(const Vector& x, double rho) const;
  /// 2 H^T (Hx - y).
  Vector subgradient(const Vector& x) const;

  /// Objective and subgradient sharing one pass.
  void evaluate(const Vector& x, double& objective, Vector& subgradient) const;

 private:
  void check_dim(const Vector& x) const;

  Matrix h_;
  Vector y_;
  std::optional<Matrix> gram_;
  std::optional<Vector> hty_;
};

/// rho_n = rho0 * growth^n, saturated at rho_max.
struct RhoSchedule {
  double rho0 = 5e-5;
  double growth = 1.06;
  double rho_max = 1e12;

  double at(long n) const;
};

double rho_at(const RhoSchedule& s, long n);

enum class Variant { plain, l2, l1 };
Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v);

/// Perturbation scale schedule beta_n.
struct BetaSchedule {
  enum class Kind { none, geometric, constant };
  Kind kind = Kind::none;
  double value = 0.0;  // base b for geometric, beta for constant

  static BetaSchedule none() { return {}; }
  static BetaSchedule geometric(double b) { return {Kind::geometric, b}; }
  static BetaSchedule constant(double beta) { return {Kind::constant, beta}; }

  double at(long n) const;
  /// True when sum_n beta_n < inf.
  bool summable() const;
};

struct ApsmConfig {
  RhoSchedule rho;
  double mu = 0.7;
  double eps1 = 1e-6;
  double eps2 = 1e-6;
  BetaSchedule beta;
  double tau = 0.0;
  Variant variant = Variant::plain;
  long max_iters = 300;
  double stop_eps = 0.0;
  bool record_iterates = false;

  /// Throws invalid_argument on any violated bound.
  void validate() const;
  /// FNV-1a over the canonical parameter string.
  std::uint64_t hash() const;
  std::string describe() const;

  /// Defaults used for each variant in the reference experiments.
  static ApsmConfig defaults(Variant v);
};

/// Relaxed subgradient projection onto lev_{<=0} Theta followed by P_B.
Vector apsm_map(const QuadraticResidualCost& cost, const Vector& x, double rho, double mu,
                const BoxSet& box);

/// Scale-aware threshold below which a subgradient is treated as zero.
inline double zero_subgradient_tol(double x_norm) { return 1e-12 * (1.0 + x_norm); }

}  // namespace apsm
