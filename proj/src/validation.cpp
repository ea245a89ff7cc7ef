#include "validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cost.hpp"
#include "engine.hpp"
#include "geometry.hpp"
#include "mimo.hpp"

namespace apsm {

namespace {

void record(SuiteResult& r, double excess, double slack) {
  ++r.checks;
  r.max_excess = r.checks == 1 ? excess : std::max(r.max_excess, excess);
  if (excess > slack) ++r.failures;
}

double grid_min_l1_objective(double x, double tau, const Constellation& c) {
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= 60000; ++i) {
    const double u = -3.0 + 1e-4 * static_cast<double>(i);
    const double d = u - c.nearest(u);
    best = std::min(best, tau * std::abs(d) + 0.5 * (x - u) * (x - u));
  }
  return best;
}

}  // namespace

SuiteResult quasi_fejer_suite(long trials, std::uint64_t seed) {
  SuiteResult res{"quasi_fejer"};
  const Constellation c = Constellation::from_modulation(Modulation::qpsk);
  const ChannelModel model;
  const long k = 4;
  const long n = 8;
  const double sigma2 = snr_to_sigma2(9.0, n, k);
  for (long t = 0; t < trials; ++t) {
    const ChannelInstance inst = draw_instance(model, n, k, c, sigma2, mix_seed(seed, static_cast<std::uint64_t>(t)));
    const QuadraticResidualCost cost(inst.h, inst.y);
    for (Variant v : {Variant::plain, Variant::l2, Variant::l1}) {
      ApsmConfig cfg = ApsmConfig::defaults(v);
      cfg.max_iters = 300;
      cfg.record_iterates = true;
      const auto run = apsm_run(cost, cfg, c, Vector::Zero(2 * k));
      const AuditResult a = check_quasi_fejer(run.trace, run.trace.iterates, inst.s, cost, cfg);
      if (a.checked == 0) continue;
      res.max_excess = res.checks == 0 ? a.max_excess : std::max(res.max_excess, a.max_excess);
      res.checks += a.checked;
      res.failures += a.violations;
    }
  }
  return res;
}

SuiteResult attracting_suite(long draws, std::uint64_t seed) {
  SuiteResult res{"attracting"};
  Rng rng(seed);
  std::uniform_int_distribution<int> dim_k(1, 4);
  std::uniform_int_distribution<int> extra_n(0, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double mu = 0.7;
  const double kappa = 1.0 - mu / 2.0;
  for (long d = 0; d < draws; ++d) {
    const int cols = 2 * dim_k(rng);
    const int rows = cols + 2 * extra_n(rng);
    const BoxSet box(0.25 + 1.75 * unit(rng));
    Matrix h(rows, cols);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
    Vector y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = 2.0 * normal(rng);
    Vector z(cols), x(cols);
    for (int i = 0; i < cols; ++i) z[i] = box.a_max * (2.0 * unit(rng) - 1.0);
    for (int i = 0; i < cols; ++i) x[i] = box.a_max * (2.0 * unit(rng) - 1.0);
    const QuadraticResidualCost cost(h, y);
    const double slack_factor = unit(rng) < 0.1 ? 0.0 : unit(rng);
    const double rho = (h * z - y).squaredNorm() * (1.0 + slack_factor);
    const Vector tx = apsm_map(cost, x, rho, mu, box);
    const double lhs = (tx - z).squaredNorm();
    const double rhs = (x - z).squaredNorm() - kappa * (x - tx).squaredNorm();
    record(res, lhs - rhs, kAuditSlack);
  }
  return res;
}

SuiteResult prox_oracle_suite(long draws, std::uint64_t seed) {
  SuiteResult res{"prox_oracle"};
  Rng rng(seed);
  std::uniform_real_distribution<double> xs(-2.0, 2.0);
  std::uniform_real_distribution<double> taus(0.0, 0.5);
  const Constellation alphabets[] = {Constellation::from_modulation(Modulation::qpsk),
                                     Constellation::from_modulation(Modulation::qam16)};
  for (long d = 0; d < draws; ++d) {
    const Constellation& c = alphabets[d % 2];
    const double x = xs(rng);
    const double tau = taus(rng);
    const double u = prox_l1_superiorization(Vector::Constant(1, x), tau, c)[0];
    const double obj = tau * std::abs(u - c.nearest(u)) + 0.5 * (x - u) * (x - u);
    record(res, obj - grid_min_l1_objective(x, tau, c), 1e-6);
  }
  return res;
}

std::vector<SuiteResult> run_validation(std::uint64_t seed, long scale) {
  scale = std::max(1L, scale);
  return {quasi_fejer_suite(20 * scale, mix_seed(seed, 0, 1)), attracting_suite(10000 * scale, mix_seed(seed, 0, 2)),
          prox_oracle_suite(1000 * scale, mix_seed(seed, 0, 3))};
}

}  // namespace apsm
