#pragma once

// Projections and proximal operators used by the detectors: the box B, the
// constellation lattice S = A^{2K}, soft thresholding and the two
// superiorization perturbations.

#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace apsm {

enum class Modulation { qpsk, qam16, qam64 };

Modulation parse_modulation(std::string_view name);
std::string_view to_string(Modulation m);

/// Real per-coordinate alphabet A. Levels are sorted, strictly increasing and
/// symmetric about zero.
class Constellation {
 public:
  /// Unit average complex-symbol energy square QAM.
  static Constellation from_modulation(Modulation m);
  /// Arbitrary symmetric alphabet, used as given (no energy normalization).
  static Constellation from_levels(std::vector<double> levels);

  const std::vector<double>& levels() const { return levels_; }
  double a_max() const { return levels_.back(); }
  int bits_per_real_dim() const { return bits_per_real_dim_; }
  std::size_t size() const { return levels_.size(); }
  /// 2 * mean(a^2): energy of one complex symbol with both parts drawn from A.
  double complex_symbol_energy() const;

  /// Nearest level; exact midpoints go to the smaller level.
  double nearest(double v) const;
  bool contains(double v) const;

 private:
  explicit Constellation(std::vector<double> levels);

  std::vector<double> levels_;
  int bits_per_real_dim_ = 0;
};

/// B = { x : ||x||_inf <= a_max }.
struct BoxSet {
  double a_max;

  explicit BoxSet(double a);
  bool contains(const Vector& x) const;
};

Vector project_box(const Vector& x, const BoxSet& box);
Vector project_constellation(const Vector& x, const Constellation& c);

/// sign(x_k) * max(|x_k| - tau, 0).
Vector soft_threshold(const Vector& x, double tau);

/// phi_tau(x - P_S(x)) + P_S(x): prox of tau * ||u - P_S(u)||_1.
Vector prox_l1_superiorization(const Vector& x, double tau, const Constellation& c);

/// P_S(x) - x.
Vector perturbation_l2(const Vector& x, const Constellation& c);
/// prox_l1_superiorization(x, tau) - x.
Vector perturbation_l1(const Vector& x, double tau, const Constellation& c);

/// max_{u in B} ||u|| for a box of dimension `dim`.
inline double box_radius(const BoxSet& box, Eigen::Index dim) {
  return box.a_max * std::sqrt(static_cast<double>(dim));
}

}  // namespace apsm
