#pragma once

// Real-valued MIMO signal model y = Hs + w. A complex N x K channel is stacked
// as [[Re, -Im], [Im, Re]]; real coordinates k and k + K form one complex symbol.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "common.hpp"
#include "geometry.hpp"

namespace apsm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Counter-based stream seed: independent of evaluation order.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0);

struct ChannelModel {
  enum class Kind { iid_gaussian, kronecker };
  Kind kind = Kind::iid_gaussian;
  double rho_tx = 0.0;
  double rho_rx = 0.0;

  void validate() const;
};

ChannelModel::Kind parse_channel_kind(std::string_view name);
std::string_view to_string(ChannelModel::Kind k);

struct ChannelInstance {
  Matrix h;        // 2N x 2K
  Vector s;        // 2K, entries in A
  Vector w;        // 2N
  Vector y;        // 2N, y = Hs + w
  double sigma2 = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index n_rx() const { return h.rows() / 2; }
  Eigen::Index k_tx() const { return h.cols() / 2; }
  /// Throws dimension_mismatch on inconsistent shapes.
  void validate() const;
};

Matrix realify(const ComplexMatrix& hc);
/// Inverse of the stacking for vectors: [Re; Im] -> complex.
Eigen::VectorXcd complexify(const Vector& x);
Vector realify_vector(const Eigen::VectorXcd& x);

/// Column-normalized N x K channel. `resamples`, when given, counts redraws
/// caused by a degenerate all-zero column.
ComplexMatrix gen_channel(const ChannelModel& model, Eigen::Index n, Eigen::Index k, Rng& rng,
                          int* resamples = nullptr);

/// Exponential correlation R[i, j] = rho^|i - j|.
Matrix exponential_correlation(Eigen::Index dim, double rho);

Vector transmit(const Constellation& c, Eigen::Index k, Rng& rng);

struct NoisyObservation {
  Vector w;
  Vector y;
};

/// w ~ N(0, sigma2/2 I). sigma2 == 0 gives w = 0.
NoisyObservation add_noise(const Vector& hs, double sigma2, Rng& rng);

/// sigma^2 = K / (N 10^(snr_db/10)) for unit-norm columns and unit-energy symbols.
double snr_to_sigma2(double snr_db, Eigen::Index n, Eigen::Index k);

/// Complex-symbol errors after hard slicing x_hat.
long symbol_errors(const Vector& x_hat, const Vector& s, const Constellation& c);

/// Draws channel, symbols and noise from one stream seeded with `seed`.
ChannelInstance draw_instance(const ChannelModel& model, Eigen::Index n, Eigen::Index k,
                              const Constellation& c, double sigma2, std::uint64_t seed);

std::string instance_to_json(const ChannelInstance& inst);
ChannelInstance instance_from_json(const std::string& text);

}  // namespace apsm
