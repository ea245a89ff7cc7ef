// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "detectors.hpp"
#include "oracles.hpp"
#include "sim.hpp"

using namespace apsm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig reference_setup() {
  ExperimentConfig cfg;  // K=16, N=64, 16-QAM, iid
  cfg.snr_db = {9.0};
  cfg.trials = 500;
  cfg.iters = 300;
  cfg.master_seed = 1;
  return cfg;
}

struct RunAudit {
  long final_feasible[3] = {0, 0, 0};
  long qf_checked = 0;
  long qf_violations = 0;
  double qf_max_excess = -1e300;
  long trials = 0;
};

// Criteria 1 and 2 share the same 500 x 3 engine runs.
const RunAudit& reference_runs() {
  static const RunAudit audit = [] {
    RunAudit a;
    const auto cfg = reference_setup();
    const auto c = cfg.constellation();
    const double sigma2 = snr_to_sigma2(cfg.snr_db[0], cfg.n, cfg.k);
    const DetectorKind kinds[3] = {DetectorKind::apsm_plain, DetectorKind::apsm_l2, DetectorKind::apsm_l1};
    a.trials = cfg.trials;
    for (long t = 0; t < cfg.trials; ++t) {
      const auto inst = draw_instance(cfg.channel, cfg.n, cfg.k, c, sigma2, cfg.trial_seed(t));
      const QuadraticResidualCost cost(inst.h, inst.y);
      for (int v = 0; v < 3; ++v) {
        ApsmConfig ac = cfg.apsm_config(kinds[v]);
        ac.record_iterates = true;
        const auto res = apsm_run(cost, ac, c, Vector::Zero(inst.h.cols()));
        if (res.trace.records.back().theta_at_z == 0.0) ++a.final_feasible[v];
        const auto qf = check_quasi_fejer(res.trace, res.trace.iterates, inst.s, cost, ac);
        a.qf_checked += qf.checked;
        a.qf_violations += qf.violations;
        if (qf.checked > 0) a.qf_max_excess = std::max(a.qf_max_excess, qf.max_excess);
      }
    }
    return a;
  }();
  return audit;
}

Verdict criterion1() {
  const auto& a = reference_runs();
  const long need = (99 * a.trials + 99) / 100;
  const bool pass = a.final_feasible[0] >= need && a.final_feasible[1] >= need && a.final_feasible[2] >= need;
  return {pass, fmt("final Theta=0 in plain %ld/%ld, l2 %ld/%ld, l1 %ld/%ld (need %ld)", a.final_feasible[0],
                    a.trials, a.final_feasible[1], a.trials, a.final_feasible[2], a.trials, need)};
}

Verdict criterion2() {
  const auto& a = reference_runs();
  return {a.qf_checked > 0 && a.qf_violations == 0,
          fmt("%ld audited steps, %ld violations, max excess %.3g", a.qf_checked, a.qf_violations, a.qf_max_excess)};
}

Verdict criterion3() {
  std::mt19937_64 rng(20260301);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0), amax_d(0.2, 2.0), slack_d(0.0, 0.5);
  const double mu = 0.7, kappa = 1.0 - mu / 2.0;
  long violations = 0;
  double worst = -1e300;
  const long draws = 10000;
  for (long d = 0; d < draws; ++d) {
    const Eigen::Index rows = 2 * (1 + static_cast<Eigen::Index>(rng() % 8));
    const Eigen::Index cols = 2 * (1 + static_cast<Eigen::Index>(rng() % (rows / 2)));
    Matrix h(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) h(i, j) = g(rng);
    Vector y(rows);
    for (auto& v : y) v = 2.0 * g(rng);
    const BoxSet box(amax_d(rng));
    Vector x(cols), z(cols);
    for (auto& v : x) v = box.a_max * u(rng);
    for (auto& v : z) v = box.a_max * u(rng);
    const double rz = (h * z - y).squaredNorm();
    const double rho = d % 10 == 0 ? rz : rz * (1.0 + slack_d(rng));
    const QuadraticResidualCost cost(h, y);
    const Vector tx = apsm_map(cost, x, rho, mu, box);
    const double excess = (tx - z).squaredNorm() - ((x - z).squaredNorm() - kappa * (x - tx).squaredNorm());
    worst = std::max(worst, excess);
    if (excess > 1e-9) ++violations;
  }
  return {violations == 0, fmt("kappa=%.2f, %ld draws, %ld violations, max excess %.3g", kappa, draws, violations, worst)};
}

Verdict criterion4() {
  const auto c = Constellation::from_modulation(Modulation::qpsk);
  const ApsmConfig cfg = ApsmConfig::defaults(Variant::plain);
  const BoxSet box(c.a_max());
  long close = 0, first_order_ok = 0;
  double worst_residual = 0.0;
  for (long t = 0; t < 100; ++t) {
    const auto inst = draw_instance(ChannelModel{}, 8, 4, c, snr_to_sigma2(9.0, 8, 4), mix_seed(4, t));
    const auto apsm = detect(DetectorKind::apsm_plain, inst, c, cfg);
    const auto oracle_res = detect_box_oracle(inst, box, BoxOracleOptions{1e-10, 200000});
    const double a = (inst.h * apsm.x_hat - inst.y).squaredNorm();
    const double b = (inst.h * oracle_res.x - inst.y).squaredNorm();
    if (a <= 1.5 * b) ++close;
    const double r = box_first_order_residual(inst, box, oracle_res.x, oracle_res.lipschitz);
    worst_residual = std::max(worst_residual, r);
    if (oracle_res.converged && r <= 10 * 1e-10) ++first_order_ok;
  }
  return {close >= 95 && first_order_ok == 100,
          fmt("APSM within 1.5x of box optimum on %ld/100 (need 95); first-order condition met on %ld/100, "
              "max residual %.3g",
              close, first_order_ok, worst_residual)};
}

Verdict criterion5() {
  ExperimentConfig cfg;
  cfg.k = 2;
  cfg.n = 4;
  cfg.modulation = Modulation::qpsk;
  cfg.snr_db = {8.0};
  cfg.trials = 2000;
  cfg.master_seed = 5;
  cfg.detectors = {DetectorKind::ml_bruteforce,     DetectorKind::apsm_plain, DetectorKind::apsm_l2,
                   DetectorKind::apsm_l1,           DetectorKind::lmmse,      DetectorKind::constrained_lmmse,
                   DetectorKind::box_oracle};
  const auto table = run_ser_vs_snr(cfg);
  const SerRow* ml = table.find("ml_bruteforce", 8.0);
  bool pass = ml != nullptr;
  std::string detail = ml ? fmt("ML %ld/%ld", ml->errors, ml->symbols) : "ML row missing";
  for (const auto& r : table.rows) {
    if (!ml || r.detector == "ml_bruteforce") continue;
    const bool ok = ml->ser <= r.ser + 2.0 * r.standard_error();
    pass = pass && ok;
    detail += fmt("; %s %ld/%ld%s", r.detector.c_str(), r.errors, r.symbols, ok ? "" : " (violated)");
  }
  return {pass, detail};
}

Verdict criterion6() {
  ChannelInstance id;
  id.h = Matrix::Identity(2, 2);
  id.y = Vector(2);
  id.y << 1, -1;
  id.w = id.y;
  id.s = Vector::Zero(2);
  id.sigma2 = 1.0;
  const Vector l = detect_lmmse(id);
  const Vector cl = detect_constrained_lmmse(id);
  const double e1 = std::max(std::abs(l[0] - 0.5), std::abs(l[1] + 0.5));
  const double e2 = std::max(std::abs(cl[0] - 1.0), std::abs(cl[1] + 1.0));

  const auto c = Constellation::from_modulation(Modulation::qam16);
  double worst = 0.0;
  for (long t = 0; t < 100; ++t) {
    const auto inst = draw_instance(ChannelModel{}, 64, 16, c, snr_to_sigma2(9.0, 64, 16), mix_seed(6, t));
    const Vector alpha = constrained_lmmse_alpha(inst);
    const auto ref = oracle::constrained_alpha(inst.h, inst.sigma2);
    for (Eigen::Index k = 0; k < alpha.size(); ++k) worst = std::max(worst, std::abs(alpha[k] - ref[k]));
  }
  return {e1 <= 1e-12 && e2 <= 1e-12 && worst <= 1e-10,
          fmt("identity LMMSE err %.3g, constrained err %.3g; alpha max abs diff %.3g over 100 instances", e1, e2,
              worst)};
}

Verdict criterion7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xd(-2.0, 2.0), td(0.0, 0.5);
  const Constellation alphabets[2] = {Constellation::from_modulation(Modulation::qpsk),
                                      Constellation::from_modulation(Modulation::qam16)};
  long failures = 0;
  double worst = -1e300;
  const long draws = 10000;
  for (long d = 0; d < draws; ++d) {
    const auto& c = alphabets[d % 2];
    const double x = xd(rng), tau = td(rng);
    Vector xv(1);
    xv << x;
    const double u = prox_l1_superiorization(xv, tau, c)[0];
    const double gap = oracle::prox_objective(u, x, tau, c.levels()) - oracle::grid_prox_min(x, tau, c.levels());
    worst = std::max(worst, gap);
    if (gap > 1e-6) ++failures;
  }
  return {failures == 0, fmt("%ld draws, %ld over 1e-6, max objective gap %.3g", draws, failures, worst)};
}

const char* kCorrelatedArgs =
    "ser-snr --k 16 --n 64 --mod 16qam --channel kronecker --rho-tx 0.8 --rho-rx 0.8 --snr 18 --trials 2000 "
    "--iters 300 --detectors apsm_l1,apsm_plain,constrained_lmmse --seed 1";

ExperimentConfig correlated_setup() {
  ExperimentConfig cfg;
  cfg.channel = ChannelModel{ChannelModel::Kind::kronecker, 0.8, 0.8};
  cfg.snr_db = {18.0};
  cfg.trials = 2000;
  cfg.iters = 300;
  cfg.master_seed = 1;
  cfg.detectors = {DetectorKind::apsm_l1, DetectorKind::apsm_plain, DetectorKind::constrained_lmmse};
  return cfg;
}

Verdict criterion8() {
  const auto table = run_ser_vs_snr(correlated_setup());
  const auto* l1 = table.find("apsm_l1", 18.0);
  const auto* plain = table.find("apsm_plain", 18.0);
  const auto* clmmse = table.find("constrained_lmmse", 18.0);
  if (!l1 || !plain || !clmmse) return {false, "missing rows"};
  const bool pass = l1->ser <= plain->ser && plain->ser <= clmmse->ser;
  return {pass, fmt("seed 1: APSM-L1 %ld/%ld (%.4g) <= APSM %ld/%ld (%.4g) <= constrained LMMSE %ld/%ld (%.4g)",
                    l1->errors, l1->symbols, l1->ser, plain->errors, plain->symbols, plain->ser, clmmse->errors,
                    clmmse->symbols, clmmse->ser)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict criterion9() {
  const fs::path dir = fs::temp_directory_path() / "apsm_acceptance";
  fs::create_directories(dir);
  std::string outputs[2];
  const int workers[2] = {1, 8};
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / ("workers" + std::to_string(workers[i]) + ".csv");
    fs::remove(out);
    const std::string cmd = std::string(APSM_CLI_PATH) + " " + kCorrelatedArgs + " --workers " +
                            std::to_string(workers[i]) + " --out " + out.string();
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "CLI run failed: " + cmd};
    outputs[i] = slurp(out);
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  return {same, fmt("--workers 1 and --workers 8: %zu vs %zu bytes, %s", outputs[0].size(), outputs[1].size(),
                    same ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"feasibility convergence", criterion1}, {"quasi-Fejer audit", criterion2},
      {"kappa-attracting step", criterion3},   {"box-oracle proximity", criterion4},
      {"ML dominance", criterion5},            {"closed-form baselines", criterion6},
      {"prox grid oracle", criterion7},        {"correlated-channel ordering", criterion8},
      {"worker-count determinism", criterion9}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s %s: %s [%.1fs]\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
