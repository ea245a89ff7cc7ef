#include "cost.hpp"

#include <cmath>
#include <cstdio>

namespace apsm {

QuadraticResidualCost::QuadraticResidualCost(Matrix h, Vector y, bool cache_gram)
    : h_(std::move(h)), y_(std::move(y)) {
  require_same_size(y_.size(), h_.rows(), "observation length");
  if (cache_gram) {
    gram_ = h_.transpose() * h_;
    hty_ = h_.transpose() * y_;
  }
}

Matrix QuadraticResidualCost::gram() const { return gram_ ? *gram_ : Matrix(h_.transpose() * h_); }
Vector QuadraticResidualCost::hty() const { return hty_ ? *hty_ : Vector(h_.transpose() * y_); }

void QuadraticResidualCost::check_dim(const Vector& x) const {
  require_same_size(x.size(), h_.cols(), "iterate length");
}

void QuadraticResidualCost::evaluate(const Vector& x, double& objective, Vector& subgradient) const {
  check_dim(x);
  const Vector r = h_ * x - y_;
  objective = r.squaredNorm();
  if (gram_) {
    subgradient = 2.0 * (*gram_ * x - *hty_);
  } else {
    subgradient = 2.0 * (h_.transpose() * r);
  }
}

double QuadraticResidualCost::objective(const Vector& x) const {
  check_dim(x);
  return (h_ * x - y_).squaredNorm();
}

double QuadraticResidualCost::theta(const Vector& x, double rho) const {
  if (rho < 0.0) fail(ErrorCode::invalid_argument, "rho must be nonnegative");
  return std::max(objective(x) - rho, 0.0);
}

Vector QuadraticResidualCost::subgradient(const Vector& x) const {
  double obj = 0.0;
  Vector g;
  evaluate(x, obj, g);
  return g;
}

double RhoSchedule::at(long n) const {
  if (n < 0) fail(ErrorCode::invalid_argument, "rho schedule index must be nonnegative");
  const double v = rho0 * std::pow(growth, static_cast<double>(n));
  if (!std::isfinite(v) || v > rho_max) return rho_max;
  return v;
}

double rho_at(const RhoSchedule& s, long n) { return s.at(n); }

Variant parse_variant(std::string_view name) {
  if (name == "plain") return Variant::plain;
  if (name == "l2") return Variant::l2;
  if (name == "l1") return Variant::l1;
  fail(ErrorCode::invalid_argument, "unknown APSM variant '" + std::string(name) + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::l2: return "l2";
    case Variant::l1: return "l1";
  }
  return "plain";
}

double BetaSchedule::at(long n) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::geometric: return std::pow(value, static_cast<double>(n));
    case Kind::constant: return value;
  }
  return 0.0;
}

bool BetaSchedule::summable() const {
  return kind == Kind::none || kind == Kind::geometric || value == 0.0;
}

void ApsmConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::invalid_argument, m); };
  if (!(rho.rho0 >= 0.0)) bad("rho0 must be >= 0");
  if (!(rho.growth >= 1.0)) bad("rho growth must be >= 1");
  if (!(rho.rho_max >= rho.rho0)) bad("rho_max must be >= rho0");
  if (!(eps1 > 0.0) || !(eps2 > 0.0) || eps1 > 2.0 - eps2) bad("invalid relaxation bounds eps1/eps2");
  if (!(mu >= eps1 && mu <= 2.0 - eps2)) bad("mu must lie in [eps1, 2 - eps2]");
  if (beta.kind == BetaSchedule::Kind::geometric && !(beta.value > 0.0 && beta.value < 1.0)) {
    bad("geometric beta base must lie in (0, 1)");
  }
  if (beta.kind == BetaSchedule::Kind::constant && !(beta.value >= 0.0)) bad("constant beta must be >= 0");
  if (!(tau >= 0.0)) bad("tau must be >= 0");
  if (max_iters < 0) bad("max_iters must be >= 0");
  if (!(stop_eps >= 0.0)) bad("stop_eps must be >= 0");
}

std::string ApsmConfig::describe() const {
  const char* beta_kind = beta.kind == BetaSchedule::Kind::none        ? "none"
                          : beta.kind == BetaSchedule::Kind::geometric ? "geometric"
                                                                       : "constant";
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "variant=%s rho0=%.17g growth=%.17g rho_max=%.17g mu=%.17g eps1=%.17g eps2=%.17g "
                "beta=%s:%.17g tau=%.17g max_iters=%ld stop_eps=%.17g",
                std::string(to_string(variant)).c_str(), rho.rho0, rho.growth, rho.rho_max, mu, eps1,
                eps2, beta_kind, beta.value, tau, max_iters, stop_eps);
  return buf;
}

std::uint64_t ApsmConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : describe()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ApsmConfig ApsmConfig::defaults(Variant v) {
  ApsmConfig cfg;
  cfg.variant = v;
  switch (v) {
    case Variant::plain: break;
    case Variant::l2: cfg.beta = BetaSchedule::geometric(0.9); break;
    case Variant::l1:
      cfg.beta = BetaSchedule::constant(0.9999);
      cfg.tau = 0.005;
      break;
  }
  return cfg;
}

Vector apsm_map(const QuadraticResidualCost& cost, const Vector& x, double rho, double mu,
                const BoxSet& box) {
  if (rho < 0.0) fail(ErrorCode::invalid_argument, "rho must be nonnegative");
  if (!(mu > 0.0 && mu < 2.0)) fail(ErrorCode::invalid_argument, "mu must lie in (0, 2)");
  double obj = 0.0;
  Vector g;
  cost.evaluate(x, obj, g);
  const double theta = obj - rho;
  const double gg = g.squaredNorm();
  if (theta > 0.0 && std::sqrt(gg) > zero_subgradient_tol(x.norm())) {
    return project_box(x - (mu * theta / gg) * g, box);
  }
  return project_box(x, box);
}

}  // namespace apsm
