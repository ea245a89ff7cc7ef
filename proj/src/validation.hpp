#pragma once

// Randomized invariant suites run by `apsm validate`.

#include <cstdint>
#include <string>
#include <vector>

namespace apsm {

struct SuiteResult {
  std::string name;
  long checks = 0;
  long failures = 0;
  double max_excess = 0.0;

  bool passed() const { return checks > 0 && failures == 0; }
};

/// Engine runs on small seeded instances, each audited for the quasi-Fejer
/// inequality against the transmitted vector.
SuiteResult quasi_fejer_suite(long trials, std::uint64_t seed);
/// Random single applications of the APSM map with a feasible reference.
SuiteResult attracting_suite(long draws, std::uint64_t seed);
/// Scalar prox of tau * dist(u, A) against a dense grid search.
SuiteResult prox_oracle_suite(long draws, std::uint64_t seed);

std::vector<SuiteResult> run_validation(std::uint64_t seed, long scale = 1);

}  // namespace apsm
