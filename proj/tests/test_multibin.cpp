#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"
#include "boxlift/multibin.hpp"
#include "test_support.hpp"

using namespace boxlift;
using boxlift::testing::relative_error;

namespace {

constexpr double kStep = 1e-6;

template <typename F>
std::vector<double> central_differences(F f, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + kStep;
    const double up = f(x);
    x[i] = saved - kStep;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * kStep);
  }
  return g;
}

}  // namespace

TEST_CASE("bin layout") {
  const BinLayout two = BinLayout::uniform(2);
  CHECK(two.center(0) == doctest::Approx(-kPi));
  CHECK(two.center(1) == doctest::Approx(0.0));
  CHECK(two.coverage_half_width == doctest::Approx(0.55 * kPi));
  CHECK(BinLayout::uniform(8).center(4) == doctest::Approx(0.0));
  CHECK_THROWS_AS(BinLayout::uniform(0).validate(), std::invalid_argument);
  CHECK_THROWS_AS((BinLayout{4, 0.2}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((BinLayout{2, 2.0 * kPi / 2}).validate(), std::invalid_argument);
  CHECK_NOTHROW((BinLayout{1, kPi}).validate());
}

TEST_CASE("bins_covering") {
  const BinLayout two{2, 0.55 * kPi};
  CHECK(bins_covering(two, 0.0) == std::vector<int>{1});
  CHECK(bins_covering(two, 0.5 * kPi) == std::vector<int>{0, 1});
  CHECK(bins_covering(two, kPi) == std::vector<int>{0});

  const BinLayout eight = BinLayout::uniform(8);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 2000; ++t) {
    const double theta = wrap_angle(u(rng));
    std::vector<int> brute;
    for (int i = 0; i < 8; ++i) {
      double d = std::fmod(std::abs(theta - eight.center(i)), 2 * kPi);
      d = std::min(d, 2 * kPi - d);
      if (d <= eight.coverage_half_width) brute.push_back(i);
    }
    CHECK(bins_covering(eight, theta) == brute);
    CHECK(brute.size() >= 1);
    CHECK(brute.size() <= 2);
  }
}

TEST_CASE("encode") {
  const BinLayout two = BinLayout::uniform(2);
  const MultiBinTarget at_zero = encode(two, 0.0);
  CHECK(at_zero.target_bin == 1);
  CHECK(at_zero.encoding.confidence == std::vector<double>{0.0, 1.0});
  CHECK(at_zero.encoding.cos_delta[1] == doctest::Approx(1.0));
  CHECK(at_zero.encoding.sin_delta[1] == doctest::Approx(0.0));

  const MultiBinTarget off = encode(two, two.center(0) + 0.1);
  CHECK(off.target_bin == 0);
  CHECK(std::atan2(off.encoding.sin_delta[0], off.encoding.cos_delta[0]) == doctest::Approx(0.1));

  // Equidistant from both centers: lower index wins.
  CHECK(encode(two, 0.5 * kPi).target_bin == 0);
}

TEST_CASE("decode") {
  const BinLayout four = BinLayout::uniform(4);
  MultiBinEncoding enc;
  enc.confidence = {0.3, 0.3, 0.3, 0.3};
  enc.cos_delta = {std::cos(0.2), 1, 1, 1};
  enc.sin_delta = {std::sin(0.2), 0, 0, 0};
  CHECK(decode(four, enc) == doctest::Approx(wrap_angle(four.center(0) + 0.2)));
  enc.confidence[2] = 5.0;
  CHECK(decode(four, enc) == doctest::Approx(four.center(2)));
}

TEST_CASE("decode inverts encode") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int n : {1, 2, 3, 4, 8, 16}) {
    const BinLayout layout = BinLayout::uniform(n);
    double worst = 0.0;
    for (int t = 0; t < 5000; ++t) {
      const double theta = wrap_angle(u(rng));
      worst = std::max(worst, angular_distance(decode(layout, encode(layout, theta).encoding), theta));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("loss_conf") {
  const std::vector<double> uniform{0.4, 0.4};
  CHECK(loss_conf(uniform, 0).value == doctest::Approx(std::log(2.0)));
  const std::vector<double> confident{800.0, -800.0};
  CHECK(loss_conf(confident, 0).value < 1e-12);
  CHECK(std::isfinite(loss_conf(confident, 1).value));
  CHECK(loss_conf(confident, 1).value == doctest::Approx(1600.0));

  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 8;
    std::vector<double> logits(n);
    for (double& v : logits) v = g(rng);
    const int target = t % n;
    const auto res = loss_conf(logits, target);
    const auto fd = central_differences([&](const std::vector<double>& x) { return loss_conf(x, target).value; },
                                        logits);
    for (int i = 0; i < n; ++i) CHECK(relative_error(res.gradient[i], fd[i]) < 1e-6);
  }
}

TEST_CASE("loss_loc") {
  const BinLayout two = BinLayout::uniform(2);
  SUBCASE("perfect prediction") {
    const double theta = 0.5 * kPi;  // covered by both bins
    std::vector<double> raw;
    for (int i = 0; i < 2; ++i) {
      const double d = theta - two.center(i);
      raw.push_back(3.0 * std::cos(d));
      raw.push_back(3.0 * std::sin(d));
    }
    CHECK(loss_loc(two, raw, theta).value == doctest::Approx(-1.0));
  }
  SUBCASE("opposite prediction on the single covering bin") {
    const std::vector<double> raw{1.0, 0.0, -1.0, 0.0};
    CHECK(loss_loc(two, raw, 0.0).value == doctest::Approx(1.0));
  }
  SUBCASE("invariant to positive scaling of a pair") {
    const std::vector<double> raw{0.3, -0.8, 0.9, 0.2};
    std::vector<double> scaled = raw;
    scaled[2] *= 7.5;
    scaled[3] *= 7.5;
    CHECK(loss_loc(two, raw, 1.0).value == doctest::Approx(loss_loc(two, scaled, 1.0).value).epsilon(1e-14));
  }
  SUBCASE("zero pair") {
    const std::vector<double> raw{0.0, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(loss_loc(two, raw, 0.0), ZeroVector);
  }
  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(24);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int t = 0; t < 100; ++t) {
      const BinLayout layout = BinLayout::uniform(1 + t % 8);
      std::vector<double> raw(2 * layout.n_bins);
      for (double& v : raw) v = g(rng) + (v >= 0 ? 0.1 : -0.1);
      const double theta = wrap_angle(u(rng));
      const auto res = loss_loc(layout, raw, theta);
      const auto fd =
          central_differences([&](const std::vector<double>& x) { return loss_loc(layout, x, theta).value; }, raw);
      for (std::size_t i = 0; i < raw.size(); ++i) CHECK(relative_error(res.gradient[i], fd[i]) < 1e-5);
    }
  }
}

TEST_CASE("loss_total_orientation") {
  CHECK(loss_total_orientation(std::log(2.0), -1.0, 1.0) == doctest::Approx(std::log(2.0) - 1.0));
  CHECK_THROWS_AS(loss_total_orientation(1.0, 1.0, 0.0), std::invalid_argument);
  const double base = loss_total_orientation(0.7, -0.4, 1.0) - 0.7;
  for (double w : {0.5, 1.0, 2.0}) CHECK(loss_total_orientation(0.7, -0.4, w) - 0.7 == doctest::Approx(w * base));
}

TEST_CASE("loss_dims") {
  const Dimensions truth{4.0, 1.5, 1.7}, mean{3.7, 1.5, 1.7};
  CHECK(loss_dims(truth, mean, Vec3(0.3, 0, 0)).value == doctest::Approx(0.0));
  CHECK(loss_dims(truth, mean, Vec3::Zero()).value == doctest::Approx(0.03));

  std::mt19937_64 rng(25);
  std::normal_distribution<double> g(0.0, 0.5);
  for (int t = 0; t < 100; ++t) {
    const Dimensions tr{3 + std::abs(g(rng)), 1 + std::abs(g(rng)), 1 + std::abs(g(rng))};
    const std::vector<double> delta{g(rng), g(rng), g(rng)};
    const auto res = loss_dims(tr, mean, Vec3(delta[0], delta[1], delta[2]));
    const auto fd = central_differences(
        [&](const std::vector<double>& x) { return loss_dims(tr, mean, Vec3(x[0], x[1], x[2])).value; }, delta);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(res.gradient[i] - fd[i]) < 1e-8);
  }
}

TEST_CASE("local and global yaw") {
  CHECK(local_to_global(0.2, 0.3) == doctest::Approx(0.5));
  CHECK(local_to_global(3.0, 1.0) == doctest::Approx(4.0 - 2 * kPi));
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 1000; ++t) {
    const double l = wrap_angle(u(rng)), r = u(rng) * 0.3;
    CHECK(angular_distance(global_to_local(local_to_global(l, r), r), l) < 1e-12);
  }
}

TEST_CASE("ray_angle") {
  const CameraIntrinsics k{721.5377, 721.5377, 609.5593, 172.854};
  CHECK(ray_angle(k, k.cx) == 0.0);
  CHECK(ray_angle(k, k.cx + k.fx) == doctest::Approx(kPi / 4));
  CHECK(ray_angle(k, k.cx - k.fx) == doctest::Approx(-kPi / 4));
}
