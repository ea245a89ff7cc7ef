#include "geometry.hpp"

#include <algorithm>
#include <cmath>

namespace apsm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::budget_exceeded: return "budget_exceeded";
    case ErrorCode::solver_failure: return "solver_failure";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::parse_error: return "parse_error";
  }
  return "unknown";
}

Modulation parse_modulation(std::string_view name) {
  if (name == "qpsk") return Modulation::qpsk;
  if (name == "16qam") return Modulation::qam16;
  if (name == "64qam") return Modulation::qam64;
  fail(ErrorCode::invalid_argument, "unknown modulation '" + std::string(name) + "'");
}

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::qpsk: return "qpsk";
    case Modulation::qam16: return "16qam";
    case Modulation::qam64: return "64qam";
  }
  return "qpsk";
}

Constellation::Constellation(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) fail(ErrorCode::invalid_argument, "constellation needs at least one level");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1])) {
      fail(ErrorCode::invalid_argument, "constellation levels must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] != -levels_[levels_.size() - 1 - i]) {
      fail(ErrorCode::invalid_argument, "constellation levels must be symmetric about zero");
    }
  }
  if (!(levels_.back() > 0.0)) fail(ErrorCode::invalid_argument, "constellation must have a positive level");
  const std::size_t m = levels_.size();
  if ((m & (m - 1)) == 0) {
    while ((std::size_t{1} << bits_per_real_dim_) < m) ++bits_per_real_dim_;
  }
}

Constellation Constellation::from_levels(std::vector<double> levels) {
  std::sort(levels.begin(), levels.end());
  return Constellation(std::move(levels));
}

Constellation Constellation::from_modulation(Modulation m) {
  // Odd-integer PAM per real dimension, scaled so that 2 * mean(a^2) = 1.
  int per_dim = 2;
  switch (m) {
    case Modulation::qpsk: per_dim = 2; break;
    case Modulation::qam16: per_dim = 4; break;
    case Modulation::qam64: per_dim = 8; break;
  }
  // 2 * mean((2i+1-M)^2) = 2 (M^2 - 1) / 3
  const double scale = 1.0 / std::sqrt(2.0 * (per_dim * per_dim - 1) / 3.0);
  std::vector<double> levels;
  for (int i = 0; i < per_dim; ++i) levels.push_back((2 * i + 1 - per_dim) * scale);
  return Constellation(std::move(levels));
}

double Constellation::complex_symbol_energy() const {
  double acc = 0.0;
  for (double a : levels_) acc += a * a;
  return 2.0 * acc / static_cast<double>(levels_.size());
}

double Constellation::nearest(double v) const {
  auto hi = std::upper_bound(levels_.begin(), levels_.end(), v);
  if (hi == levels_.begin()) return levels_.front();
  if (hi == levels_.end()) return levels_.back();
  const double upper = *hi;
  const double lower = *(hi - 1);
  return (v - lower) <= (upper - v) ? lower : upper;
}

bool Constellation::contains(double v) const {
  return std::binary_search(levels_.begin(), levels_.end(), v);
}

BoxSet::BoxSet(double a) : a_max(a) {
  if (!(a > 0.0)) fail(ErrorCode::invalid_argument, "box half-width must be positive");
}

bool BoxSet::contains(const Vector& x) const {
  return x.size() == 0 || x.cwiseAbs().maxCoeff() <= a_max;
}

Vector project_box(const Vector& x, const BoxSet& box) {
  return x.cwiseMax(-box.a_max).cwiseMin(box.a_max);
}

Vector project_constellation(const Vector& x, const Constellation& c) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = c.nearest(x[i]);
  return out;
}

Vector soft_threshold(const Vector& x, double tau) {
  if (tau < 0.0) fail(ErrorCode::invalid_argument, "soft threshold requires tau >= 0");
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
  return out;
}

Vector prox_l1_superiorization(const Vector& x, double tau, const Constellation& c) {
  const Vector ps = project_constellation(x, c);
  if (tau == 0.0) return x;
  return soft_threshold(x - ps, tau) + ps;
}

Vector perturbation_l2(const Vector& x, const Constellation& c) {
  return project_constellation(x, c) - x;
}

Vector perturbation_l1(const Vector& x, double tau, const Constellation& c) {
  if (tau == 0.0) return Vector::Zero(x.size());
  return prox_l1_superiorization(x, tau, c) - x;
}

}  // namespace apsm
