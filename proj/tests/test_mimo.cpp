#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "mimo.hpp"
#include "oracles.hpp"

using namespace apsm;
using cd = std::complex<double>;

namespace {

const Constellation kQpsk = Constellation::from_modulation(Modulation::qpsk);
const Constellation kQam16 = Constellation::from_modulation(Modulation::qam16);

}  // namespace

TEST_CASE("realify examples") {
  ComplexMatrix one(1, 1);
  one(0, 0) = cd(1, 0);
  CHECK(realify(one) == Matrix::Identity(2, 2));
  ComplexMatrix imag(1, 1);
  imag(0, 0) = cd(0, 1);
  Matrix expect(2, 2);
  expect << 0, -1, 1, 0;
  CHECK(realify(imag) == expect);
}

TEST_CASE("realify agrees with complex arithmetic") {
  Rng rng(31);
  std::normal_distribution<double> d;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 5, k = 3;
    ComplexMatrix hc(n, k);
    std::vector<std::vector<cd>> rows(n, std::vector<cd>(k));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < k; ++j) rows[i][j] = hc(i, j) = cd(d(rng), d(rng));
    Vector x(2 * k);
    for (auto& v : x) v = d(rng);
    const auto xc = complexify(x);
    std::vector<cd> xs(xc.data(), xc.data() + xc.size());
    const double ref = oracle::complex_norm2(rows, xs);
    CHECK(std::abs((realify(hc) * x).squaredNorm() - ref) <= 1e-12 * (1 + ref));
    CHECK((realify_vector(complexify(x)) - x).norm() <= 1e-14);
    for (Eigen::Index j = 0; j < k; ++j) CHECK(xc[j] == cd(x[j], x[j + k]));
  }
}

TEST_CASE("gen_channel columns are unit norm") {
  Rng rng(32);
  for (auto kind : {ChannelModel::Kind::iid_gaussian, ChannelModel::Kind::kronecker}) {
    ChannelModel m{kind, 0.7, 0.5};
    for (int t = 0; t < 50; ++t) {
      int resamples = 0;
      const auto hc = gen_channel(m, 8, 4, rng, &resamples);
      CHECK(resamples == 0);
      for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(hc.col(j).norm() - 1.0) <= 1e-12);
      const Matrix h = realify(hc);
      for (Eigen::Index j = 0; j < 8; ++j) CHECK(std::abs(h.col(j).norm() - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(gen_channel(ChannelModel{}, 2, 3, rng), Error);
  CHECK_THROWS_AS((ChannelModel{ChannelModel::Kind::kronecker, 1.0, 0.0}.validate()), Error);
}

TEST_CASE("uncorrelated kronecker follows the iid path") {
  Rng a(33), b(33);
  const auto iid = gen_channel(ChannelModel{}, 6, 3, a);
  const auto kron = gen_channel(ChannelModel{ChannelModel::Kind::kronecker, 0.0, 0.0}, 6, 3, b);
  CHECK((iid - kron).norm() <= 1e-15);
}

TEST_CASE("kronecker correlation exceeds the iid baseline") {
  Rng rng(34);
  const ChannelModel kron{ChannelModel::Kind::kronecker, 0.9, 0.9};
  double c_iid = 0.0, c_kron = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = gen_channel(ChannelModel{}, 8, 4, rng);
    const auto b = gen_channel(kron, 8, 4, rng);
    c_iid += std::abs(a.col(0).dot(a.col(1)));
    c_kron += std::abs(b.col(0).dot(b.col(1)));
  }
  CHECK(c_kron > c_iid);
  const Matrix r = exponential_correlation(3, 0.5);
  CHECK(r(0, 2) == doctest::Approx(0.25));
  CHECK(r(1, 1) == 1.0);
}

TEST_CASE("transmit") {
  Rng rng(35);
  const Vector s = transmit(kQpsk, 8, rng);
  CHECK(s.size() == 16);
  for (double v : s) CHECK(std::abs(std::abs(v) - 1.0 / std::sqrt(2.0)) < 1e-15);

  Rng r1(9), r2(9);
  CHECK(transmit(kQam16, 4, r1) == transmit(kQam16, 4, r2));

  const long draws = 100000;
  double mean = 0.0, energy = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double v = transmit(kQam16, 1, rng)[0];
    mean += v;
    energy += v * v;
  }
  mean /= draws;
  energy /= draws;
  double e_ref = 0.0, e4 = 0.0;
  for (double a : kQam16.levels()) {
    e_ref += a * a / 4.0;
    e4 += a * a * a * a / 4.0;
  }
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(e_ref / draws));
  CHECK(std::abs(energy - e_ref) <= 3.0 * std::sqrt((e4 - e_ref * e_ref) / draws));
}

TEST_CASE("add_noise") {
  Rng rng(36);
  const Vector hs = Vector::LinSpaced(6, -1, 1);
  const auto clean = add_noise(hs, 0.0, rng);
  CHECK(clean.y == hs);
  CHECK(clean.w == Vector::Zero(6));
  CHECK_THROWS_AS(add_noise(hs, -1.0, rng), Error);

  const double sigma2 = 0.3;
  const auto noisy = add_noise(Vector::Zero(1000000), sigma2, rng);
  CHECK(noisy.y == noisy.w);
  const double var = noisy.w.squaredNorm() / 1e6;
  const double target = sigma2 / 2.0;
  CHECK(std::abs(var - target) <= 3.0 * target * std::sqrt(2.0 / 1e6));

  double e = 0.0;
  for (int t = 0; t < 2000; ++t) e += add_noise(Vector::Zero(16), sigma2, rng).w.squaredNorm();
  CHECK(e / 2000 == doctest::Approx(8 * sigma2).epsilon(0.03));
}

TEST_CASE("snr mapping") {
  CHECK(snr_to_sigma2(0.0, 4, 4) == doctest::Approx(1.0));
  CHECK(snr_to_sigma2(10.0, 64, 16) == doctest::Approx(0.025));

  const Eigen::Index n = 8, k = 4;
  const double snr_db = 6.0;
  double signal = 0.0, noise = 0.0;
  for (std::uint64_t t = 0; t < 10000; ++t) {
    const auto inst = draw_instance(ChannelModel{}, n, k, kQam16, snr_to_sigma2(snr_db, n, k), t);
    signal += (inst.h * inst.s).squaredNorm();
    noise += inst.w.squaredNorm();
  }
  CHECK(signal / noise == doctest::Approx(std::pow(10.0, snr_db / 10.0)).epsilon(0.05));
}

TEST_CASE("symbol_errors pairing") {
  Rng rng(37);
  const Vector s = transmit(kQam16, 4, rng);
  CHECK(symbol_errors(s, s, kQam16) == 0);
  Vector one = s;
  one[5] = -one[5];
  CHECK(symbol_errors(one, s, kQam16) == 1);
  Vector both = s;
  both[1] = -both[1];
  both[5] = -both[5];
  CHECK(symbol_errors(both, s, kQam16) == 1);
  Vector wrong(8);
  for (Eigen::Index i = 0; i < 8; ++i) wrong[i] = s[i] > 0 ? -10.0 : 10.0;
  CHECK(symbol_errors(wrong, s, kQam16) == 4);
  CHECK_THROWS_AS(symbol_errors(Vector::Zero(7), Vector::Zero(7), kQam16), Error);
}

TEST_CASE("instances are consistent and serializable") {
  const auto inst = draw_instance(ChannelModel{}, 4, 2, kQam16, 0.1, 42);
  CHECK(inst.y == Vector(inst.h * inst.s + inst.w));
  for (double v : inst.s) CHECK(kQam16.contains(v));
  const auto same = draw_instance(ChannelModel{}, 4, 2, kQam16, 0.1, 42);
  CHECK(same.h == inst.h);
  CHECK(same.y == inst.y);

  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.h == inst.h);
  CHECK(back.s == inst.s);
  CHECK(back.y == inst.y);
  CHECK(back.sigma2 == inst.sigma2);
  CHECK(back.seed == 42);
  CHECK_THROWS_AS(instance_from_json("{not json"), Error);
  CHECK_THROWS_AS(instance_from_json(R"({"n":1,"k":1,"H":[1,0,0],"s":[1,1],"y":[1,1],"sigma2":0,"seed":0})"),
                  Error);
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(5, 7) == mix_seed(5, 7));
}
