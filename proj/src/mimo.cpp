#include "mimo.hpp"

#include <cmath>

#include <json.hpp>

namespace apsm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ (stream * 0xd1b54a32d192ed03ull));
}

void ChannelModel::validate() const {
  if (kind == Kind::kronecker) {
    if (!(std::abs(rho_tx) < 1.0) || !(std::abs(rho_rx) < 1.0)) {
      fail(ErrorCode::invalid_argument, "correlation coefficients must satisfy |rho| < 1");
    }
  }
}

ChannelModel::Kind parse_channel_kind(std::string_view name) {
  if (name == "iid") return ChannelModel::Kind::iid_gaussian;
  if (name == "kronecker") return ChannelModel::Kind::kronecker;
  fail(ErrorCode::invalid_argument, "unknown channel model '" + std::string(name) + "'");
}

std::string_view to_string(ChannelModel::Kind k) {
  return k == ChannelModel::Kind::kronecker ? "kronecker" : "iid";
}

void ChannelInstance::validate() const {
  if (h.rows() % 2 != 0 || h.cols() % 2 != 0) {
    fail(ErrorCode::dimension_mismatch, "channel matrix dimensions must be even");
  }
  require_same_size(s.size(), h.cols(), "transmit vector length");
  require_same_size(w.size(), h.rows(), "noise vector length");
  require_same_size(y.size(), h.rows(), "observation length");
}

Matrix realify(const ComplexMatrix& hc) {
  const Eigen::Index n = hc.rows();
  const Eigen::Index k = hc.cols();
  Matrix h(2 * n, 2 * k);
  h.topLeftCorner(n, k) = hc.real();
  h.topRightCorner(n, k) = -hc.imag();
  h.bottomLeftCorner(n, k) = hc.imag();
  h.bottomRightCorner(n, k) = hc.real();
  return h;
}

Eigen::VectorXcd complexify(const Vector& x) {
  if (x.size() % 2 != 0) fail(ErrorCode::dimension_mismatch, "real vector length must be even");
  const Eigen::Index k = x.size() / 2;
  Eigen::VectorXcd out(k);
  for (Eigen::Index i = 0; i < k; ++i) out[i] = {x[i], x[i + k]};
  return out;
}

Vector realify_vector(const Eigen::VectorXcd& x) {
  const Eigen::Index k = x.size();
  Vector out(2 * k);
  out.head(k) = x.real();
  out.tail(k) = x.imag();
  return out;
}

Matrix exponential_correlation(Eigen::Index dim, double rho) {
  Matrix r(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return r;
}

namespace {

Matrix correlation_sqrt(Eigen::Index dim, double rho) {
  if (rho == 0.0) return Matrix::Identity(dim, dim);
  Eigen::SelfAdjointEigenSolver<Matrix> es(exponential_correlation(dim, rho));
  return es.operatorSqrt();
}

}  // namespace

ComplexMatrix gen_channel(const ChannelModel& model, Eigen::Index n, Eigen::Index k, Rng& rng,
                          int* resamples) {
  if (k < 1 || n < k) fail(ErrorCode::invalid_argument, "channel requires N >= K >= 1");
  model.validate();
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (;;) {
    ComplexMatrix g(n, k);
    // Column-major fill: entry (i, j) uses draws in order re, im.
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        g(i, j) = {re, im};
      }
    }
    if (model.kind == ChannelModel::Kind::kronecker && (model.rho_rx != 0.0 || model.rho_tx != 0.0)) {
      const Matrix rr = correlation_sqrt(n, model.rho_rx);
      const Matrix rt = correlation_sqrt(k, model.rho_tx);
      g = rr.cast<std::complex<double>>() * g * rt.cast<std::complex<double>>();
    }
    bool degenerate = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double norm = g.col(j).norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        degenerate = true;
        break;
      }
      g.col(j) /= norm;
    }
    if (!degenerate) return g;
    if (resamples) ++*resamples;
  }
}

Vector transmit(const Constellation& c, Eigen::Index k, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
  Vector s(2 * k);
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = c.levels()[pick(rng)];
  return s;
}

NoisyObservation add_noise(const Vector& hs, double sigma2, Rng& rng) {
  if (!(sigma2 >= 0.0)) fail(ErrorCode::invalid_argument, "noise variance must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(sigma2 / 2.0);
  NoisyObservation out;
  out.w.resize(hs.size());
  for (Eigen::Index i = 0; i < hs.size(); ++i) out.w[i] = scale * normal(rng);
  out.y = hs + out.w;
  return out;
}

double snr_to_sigma2(double snr_db, Eigen::Index n, Eigen::Index k) {
  if (n < 1 || k < 1) fail(ErrorCode::invalid_argument, "dimensions must be positive");
  return static_cast<double>(k) / (static_cast<double>(n) * std::pow(10.0, snr_db / 10.0));
}

long symbol_errors(const Vector& x_hat, const Vector& s, const Constellation& c) {
  require_same_size(x_hat.size(), s.size(), "estimate length");
  if (s.size() % 2 != 0) fail(ErrorCode::dimension_mismatch, "real vector length must be even");
  const Eigen::Index k = s.size() / 2;
  long errors = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (c.nearest(x_hat[i]) != s[i] || c.nearest(x_hat[i + k]) != s[i + k]) ++errors;
  }
  return errors;
}

ChannelInstance draw_instance(const ChannelModel& model, Eigen::Index n, Eigen::Index k,
                              const Constellation& c, double sigma2, std::uint64_t seed) {
  Rng rng(seed);
  ChannelInstance inst;
  inst.seed = seed;
  inst.sigma2 = sigma2;
  inst.h = realify(gen_channel(model, n, k, rng));
  inst.s = transmit(c, k, rng);
  auto obs = add_noise(inst.h * inst.s, sigma2, rng);
  inst.w = std::move(obs.w);
  inst.y = std::move(obs.y);
  return inst;
}

namespace {

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vector_field(const nlohmann::json& j, const char* key, Eigen::Index expected) {
  const auto list = j.at(key).get<std::vector<double>>();
  if (static_cast<Eigen::Index>(list.size()) != expected) {
    fail(ErrorCode::dimension_mismatch, std::string("instance field '") + key + "' has length " +
                                            std::to_string(list.size()) + ", expected " +
                                            std::to_string(expected));
  }
  return Eigen::Map<const Vector>(list.data(), expected);
}

}  // namespace

std::string instance_to_json(const ChannelInstance& inst) {
  nlohmann::json j;
  j["n"] = inst.n_rx();
  j["k"] = inst.k_tx();
  std::vector<double> h;
  h.reserve(static_cast<std::size_t>(inst.h.size()));
  for (Eigen::Index r = 0; r < inst.h.rows(); ++r) {
    for (Eigen::Index c = 0; c < inst.h.cols(); ++c) h.push_back(inst.h(r, c));
  }
  j["H"] = h;
  j["s"] = to_list(inst.s);
  j["w"] = to_list(inst.w);
  j["y"] = to_list(inst.y);
  j["sigma2"] = inst.sigma2;
  j["seed"] = inst.seed;
  return j.dump();
}

ChannelInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("channel instance: ") + e.what());
  }
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto k = j.at("k").get<Eigen::Index>();
    if (n < 1 || k < 1) fail(ErrorCode::invalid_argument, "channel instance dimensions must be positive");
    ChannelInstance inst;
    const Vector flat = vector_field(j, "H", 4 * n * k);
    inst.h.resize(2 * n, 2 * k);
    for (Eigen::Index r = 0; r < 2 * n; ++r) {
      for (Eigen::Index c = 0; c < 2 * k; ++c) inst.h(r, c) = flat[r * 2 * k + c];
    }
    inst.s = vector_field(j, "s", 2 * k);
    inst.y = vector_field(j, "y", 2 * n);
    inst.w = j.contains("w") ? vector_field(j, "w", 2 * n) : Vector(inst.y - inst.h * inst.s);
    inst.sigma2 = j.at("sigma2").get<double>();
    inst.seed = j.value("seed", std::uint64_t{0});
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("channel instance: ") + e.what());
  }
}

}  // namespace apsm
