#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <sstream>

#include "engine.hpp"
#include "mimo.hpp"

using namespace apsm;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const Constellation kQpsk = Constellation::from_modulation(Modulation::qpsk);

ChannelInstance small_instance(std::uint64_t seed, double snr_db = 9.0) {
  return draw_instance(ChannelModel{}, 4, 2, kQpsk, snr_to_sigma2(snr_db, 4, 2), seed);
}

ApsmResult run(const ChannelInstance& inst, ApsmConfig cfg) {
  cfg.record_iterates = true;
  const QuadraticResidualCost cost(inst.h, inst.y);
  return apsm_run(cost, cfg, kQpsk, Vector::Zero(inst.h.cols()));
}

}  // namespace

TEST_CASE("feasible start is a fixed point") {
  const auto c = Constellation::from_levels({-1, 1});
  const QuadraticResidualCost cost(Matrix::Identity(2, 2), vec({0.3, -0.2}));
  ApsmConfig cfg;
  cfg.rho = RhoSchedule{1.0, 1.0, 1e12};
  cfg.max_iters = 50;
  const Vector x0 = vec({0.5, 0.1});
  const auto res = apsm_run(cost, cfg, c, x0);
  CHECK(res.x == x0);
  for (const auto& r : res.trace.records) CHECK(r.step_norm == 0.0);
}

TEST_CASE("interior least-squares solution is reached") {
  const auto c = Constellation::from_levels({-1, 1});
  const QuadraticResidualCost cost(Matrix::Identity(2, 2), vec({0.4, -0.4}));
  ApsmConfig cfg;
  cfg.rho = RhoSchedule{0.0, 1.0, 1e12};
  cfg.mu = 1.0;
  cfg.max_iters = 200;
  const auto res = apsm_run(cost, cfg, c, Vector::Zero(2));
  CHECK((res.x - vec({0.4, -0.4})).norm() < 1e-12);
  CHECK(res.trace.final_objective < 1e-24);
}

TEST_CASE("l1 variant ends inside the terminal sublevel set") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = small_instance(seed);
    const auto res = run(inst, ApsmConfig::defaults(Variant::l1));
    CHECK(res.trace.final_objective <= res.trace.records.back().rho + 1e-9);
    CHECK_FALSE(res.trace.summable);
  }
}

TEST_CASE("iterates stay in the box and the trace is well formed") {
  const auto inst = small_instance(3);
  const BoxSet box(kQpsk.a_max());
  for (auto v : {Variant::plain, Variant::l2, Variant::l1}) {
    const auto res = run(inst, ApsmConfig::defaults(v));
    CHECK(res.trace.records.size() == 300);
    CHECK(res.trace.iterates.size() == 301);
    for (std::size_t i = 1; i < res.trace.iterates.size(); ++i) CHECK(box.contains(res.trace.iterates[i]));
    for (const auto& r : res.trace.records) {
      CHECK(r.step_norm >= 0.0);
      CHECK(r.pert_norm >= 0.0);
      CHECK(r.theta_at_z >= 0.0);
    }
  }
}

TEST_CASE("runs are bit-identical") {
  const auto inst = small_instance(4);
  const auto a = run(inst, ApsmConfig::defaults(Variant::l1));
  const auto b = run(inst, ApsmConfig::defaults(Variant::l1));
  CHECK(a.x == b.x);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a.trace);
  write_trace_csv(sb, b.trace);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("n,theta,objective,rho,step_norm,pert_norm\n", 0) == 0);
}

TEST_CASE("plain equals l2 with zero beta") {
  const auto inst = small_instance(5);
  ApsmConfig l2 = ApsmConfig::defaults(Variant::l2);
  l2.beta = BetaSchedule::constant(0.0);
  const auto a = run(inst, ApsmConfig::defaults(Variant::plain));
  const auto b = run(inst, l2);
  CHECK(a.x == b.x);
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].theta_at_z == b.trace.records[i].theta_at_z);
    CHECK(a.trace.records[i].step_norm == b.trace.records[i].step_norm);
  }
}

TEST_CASE("stop_eps ends the run early") {
  const auto inst = small_instance(6);
  ApsmConfig cfg = ApsmConfig::defaults(Variant::plain);
  cfg.stop_eps = 1e-3;
  cfg.max_iters = 5000;
  const auto res = run(inst, cfg);
  CHECK(res.trace.records.size() < 5000);
  CHECK(res.trace.records.back().step_norm <= 1e-3);
}

TEST_CASE("errors") {
  const QuadraticResidualCost cost(Matrix::Identity(2, 2), vec({0.4, -0.4}));
  ApsmConfig cfg;
  CHECK_THROWS_AS(apsm_run(cost, cfg, kQpsk, Vector::Zero(3)), Error);
  const QuadraticResidualCost inf_cost(Matrix::Identity(2, 2), vec({std::numeric_limits<double>::infinity(), 0}));
  try {
    apsm_run(inf_cost, cfg, kQpsk, Vector::Zero(2));
    FAIL("expected non_finite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite);
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("quasi-Fejer audit") {
  long checked = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const auto inst = small_instance(seed);
    const QuadraticResidualCost cost(inst.h, inst.y);
    for (auto v : {Variant::plain, Variant::l2}) {
      const auto cfg = ApsmConfig::defaults(v);
      const auto res = run(inst, cfg);
      const auto a = check_quasi_fejer(res.trace, res.trace.iterates, inst.s, cost, cfg);
      CHECK(a.violations == 0);
      checked += a.checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("quasi-Fejer audit skips an infeasible reference") {
  const auto inst = small_instance(7);
  const QuadraticResidualCost cost(inst.h, inst.y);
  ApsmConfig cfg = ApsmConfig::defaults(Variant::plain);
  cfg.max_iters = 20;
  const auto res = run(inst, cfg);
  // Far outside every rho_n reached in 20 iterations.
  const Vector z = Vector::Constant(inst.h.cols(), 1e3);
  CHECK_FALSE(activation_index(res.trace, cost, z).has_value());
  CHECK(check_quasi_fejer(res.trace, res.trace.iterates, z, cost, cfg).checked == 0);
  CHECK(check_attracting(res.trace, res.trace.iterates, z, cost, cfg).checked == 0);
}

TEST_CASE("attracting audit and trace statistics") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto inst = small_instance(seed);
    const QuadraticResidualCost cost(inst.h, inst.y);
    for (auto v : {Variant::plain, Variant::l2, Variant::l1}) {
      const auto cfg = ApsmConfig::defaults(v);
      const auto res = run(inst, cfg);
      const auto rep = diagnose(res.trace, inst.s, cost, cfg);
      CHECK(rep.kappa == doctest::Approx(0.65));
      CHECK(rep.attracting.violations == 0);
      CHECK(rep.attracting_step_sum <= rep.attracting_step_bound + 1e-9);
      if (v == Variant::plain) {
        CHECK(rep.quasi_fejer.violations == 0);
        CHECK(rep.last_decile_step < rep.first_decile_step);
      }
      REQUIRE(rep.activation_index.has_value());
      const double theta0 = res.trace.records.front().theta_at_z;
      CHECK(rep.theta_tail <= 1e-6 * theta0);
    }
  }
}

TEST_CASE("report json") {
  const auto inst = small_instance(8);
  const QuadraticResidualCost cost(inst.h, inst.y);
  const auto cfg = ApsmConfig::defaults(Variant::l1);
  const auto res = run(inst, cfg);
  const auto text = report_to_json(diagnose(res.trace, inst.s, cost, cfg), res.trace);
  CHECK(text.find("\"summable\": false") != std::string::npos);
  CHECK(text.find("\"quasi_fejer\"") != std::string::npos);
  ApsmResult no_iterates = res;
  no_iterates.trace.iterates.clear();
  CHECK_THROWS_AS(diagnose(no_iterates.trace, inst.s, cost, cfg), Error);
}
