#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "popvb/expfam.hpp"
#include "popvb/special.hpp"

using namespace popvb;

namespace {

// Composite Simpson rule on [a, b] with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

std::vector<double> random_values(const FamilyKind& fam, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.3, 5.0);
  std::uniform_real_distribution<double> any(-2.0, 2.0);
  std::vector<double> v(fam.coordinate_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool positive = fam.tag() == Family::kDirichlet || fam.tag() == Family::kBeta ||
                          (fam.tag() == Family::kNormalMean && i + 1 == v.size());
    v[i] = positive ? pos(rng) : any(rng);
  }
  return v;
}

}  // namespace

TEST_CASE("digamma matches boost on [1e-3, 1e6]") {
  for (double x = 1e-3; x <= 1e6; x *= 1.07) {
    REQUIRE(std::abs(digamma(x) - boost::math::digamma(x)) < 1e-10);
  }
  CHECK(digamma(2.0) - digamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
}

TEST_CASE("log_gamma matches the standard library") {
  for (double x = 1e-3; x <= 1e6; x *= 1.11) {
    REQUIRE(std::abs(log_gamma(x) - std::lgamma(x)) < 1e-10 * std::max(1.0, std::abs(std::lgamma(x))));
  }
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(std::isinf(log_sum_exp(std::span<const double>())));
}

TEST_CASE("log_normalizer examples") {
  CHECK(log_normalizer(NatParam(FamilyKind::dirichlet(2), {1.0, 1.0})) == doctest::Approx(0.0));
  CHECK(log_normalizer(NatParam(FamilyKind::gaussian({1.0}), {0.0})) == doctest::Approx(0.0));
  // Normaliser of x(1-x) on the simplex by quadrature.
  const double z = simpson([](double x) { return x * (1.0 - x); }, 0.0, 1.0, 1000);
  CHECK(log_normalizer(NatParam(FamilyKind::dirichlet(2), {2.0, 2.0})) == doctest::Approx(std::log(z)).epsilon(1e-12));
  CHECK_THROWS_AS(log_normalizer(NatParam(FamilyKind::dirichlet(2), {1.0, 0.0})), std::domain_error);
  CHECK_THROWS_AS(log_normalizer(NatParam(FamilyKind::beta(), {-1.0, 2.0})), std::domain_error);
}

TEST_CASE("NatParam checks its length") {
  CHECK_THROWS_AS(NatParam(FamilyKind::dirichlet(3), {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(NatParam(FamilyKind::beta(), {1.0}), std::invalid_argument);
  CHECK(FamilyKind::beta().coordinate_count() == 2);
  CHECK(FamilyKind::gaussian({1.0, 2.0}).coordinate_count() == 2);
  CHECK(FamilyKind::normal_mean({1.0, 2.0}).coordinate_count() == 3);
  CHECK_THROWS(FamilyKind::gaussian({0.0}));
  CHECK_THROWS(FamilyKind::dirichlet(0));
}

TEST_CASE("mean_params examples") {
  auto m = mean_params(NatParam(FamilyKind::dirichlet(2), {1.0, 1.0}));
  CHECK(m[0] == doctest::Approx(-1.0));
  CHECK(m[1] == doctest::Approx(-1.0));
  m = mean_params(NatParam(FamilyKind::dirichlet(2), {2.0, 1.0}));
  CHECK(m[0] == doctest::Approx(-0.5));
  CHECK(m[1] == doctest::Approx(-1.5));
  m = mean_params(NatParam(FamilyKind::gaussian({2.0}), {3.0}));
  CHECK(m[0] == doctest::Approx(1.5));
}

TEST_CASE("Beta(3,2) mean parameters against Monte Carlo") {
  std::mt19937_64 rng(11);
  std::gamma_distribution<double> ga(3.0, 1.0);
  std::gamma_distribution<double> gb(2.0, 1.0);
  const int n = 4'000'000;
  double s0 = 0.0;
  double s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ga(rng);
    const double y = gb(rng);
    s0 += std::log(x / (x + y));
    s1 += std::log(y / (x + y));
  }
  const auto m = mean_params(NatParam(FamilyKind::beta(), {3.0, 2.0}));
  CHECK(std::abs(m[0] - s0 / n) < 1e-3);
  CHECK(std::abs(m[1] - s1 / n) < 1e-3);
  CHECK(m[0] == doctest::Approx(-(1.0 / 3.0 + 1.0 / 4.0)));
  CHECK(m[1] == doctest::Approx(-(1.0 / 2.0 + 1.0 / 3.0 + 1.0 / 4.0)));
}

TEST_CASE("sample_statistic averages to mean_params") {
  std::mt19937_64 rng(5);
  const std::vector<std::pair<FamilyKind, std::vector<double>>> cases = {
      {FamilyKind::beta(), {0.4, 2.0}},
      {FamilyKind::dirichlet(3), {0.2, 1.0, 3.0}},
      {FamilyKind::normal_mean({2.0}), {1.0, 3.0}},
  };
  for (const auto& [fam, p] : cases) {
    const auto expected = mean_params(NatParam(fam, p));
    std::vector<double> sum(expected.size(), 0.0);
    std::vector<double> t(expected.size());
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
      sample_statistic(fam, p, rng, t);
      for (std::size_t j = 0; j < t.size(); ++j) sum[j] += t[j];
    }
    for (std::size_t j = 0; j < t.size(); ++j) CHECK(sum[j] / n == doctest::Approx(expected[j]).epsilon(0.02));
  }
}

TEST_CASE("finite-difference gradient of log_normalizer equals mean_params") {
  std::mt19937_64 rng(3);
  const std::vector<FamilyKind> families = {FamilyKind::dirichlet(4), FamilyKind::beta(), FamilyKind::categorical(5),
                                            FamilyKind::gaussian({0.5, 2.0}), FamilyKind::normal_mean({1.5, 0.7})};
  for (const auto& fam : families) {
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_values(fam, rng);
      std::vector<double> grad(p.size());
      mean_params(fam, p, grad);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(p[i]));
        auto up = p;
        auto down = p;
        up[i] += h;
        down[i] -= h;
        const double fd = (log_normalizer(fam, up) - log_normalizer(fam, down)) / (2 * h);
        CHECK(std::abs(fd - grad[i]) <= 1e-5 * std::max(1.0, std::abs(grad[i])));
      }
    }
  }
}

TEST_CASE("log_density examples") {
  const NatParam uniform(FamilyKind::categorical(4), {0.0, 0.0, 0.0, 0.0});
  for (std::size_t w = 0; w < 4; ++w) CHECK(log_density(uniform, w) == doctest::Approx(std::log(0.25)));
  CHECK_THROWS_AS(log_density(uniform, std::size_t{4}), std::domain_error);

  const double x0 = 0.0;
  CHECK(log_density(NatParam(FamilyKind::gaussian({1.0}), {0.0}), std::span<const double>(&x0, 1)) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
  const double x2 = 2.0;
  const double oracle = std::log(std::exp(-0.5 * (2.0 - 1.0) * (2.0 - 1.0)) / std::sqrt(2 * std::numbers::pi));
  CHECK(log_density(NatParam(FamilyKind::gaussian({1.0}), {1.0}), std::span<const double>(&x2, 1)) ==
        doctest::Approx(oracle));
}

TEST_CASE("densities normalise") {
  const NatParam cat(FamilyKind::categorical(6), {0.3, -1.0, 2.0, 0.0, 0.5, -3.0});
  double total = 0.0;
  for (std::size_t w = 0; w < 6; ++w) total += std::exp(log_density(cat, w));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const NatParam g(FamilyKind::gaussian({0.7}), {0.7 * 1.3});
  const double mass = simpson(
      [&](double x) { return std::exp(log_density(g, std::span<const double>(&x, 1))); }, -40.0, 40.0, 20000);
  CHECK(std::abs(mass - 1.0) < 1e-4);

  const NatParam q(FamilyKind::normal_mean({2.0}), {1.0, 3.0});
  const double qmass = simpson(
      [&](double x) { return std::exp(log_density(q, std::span<const double>(&x, 1))); }, -20.0, 20.0, 20000);
  CHECK(std::abs(qmass - 1.0) < 1e-4);

  const NatParam b(FamilyKind::beta(), {3.0, 2.0});
  const double bmass = simpson(
      [&](double v) { return v <= 0.0 || v >= 1.0 ? 0.0 : std::exp(log_density(b, std::span<const double>(&v, 1))); },
      0.0, 1.0, 2000);
  CHECK(std::abs(bmass - 1.0) < 1e-6);
}

TEST_CASE("combine_stats and scale_stats") {
  const auto fam = FamilyKind::dirichlet(3);
  SuffStats a = SuffStats::zeros(fam);
  a.values = {1.0, 2.0, 3.0};
  a.weight = 1.0;
  SuffStats b = SuffStats::zeros(fam);
  b.values = {0.5, -1.0, 4.0};
  b.weight = 2.0;
  SuffStats c = SuffStats::zeros(fam);
  c.values = {0.25, 0.125, 8.0};
  c.weight = 1.0;

  const auto id = combine_stats(a, SuffStats::zeros(fam));
  CHECK(id.values == a.values);
  CHECK(id.weight == 1.0);
  CHECK(combine_stats(a, b).values == combine_stats(b, a).values);
  const auto left = combine_stats(combine_stats(a, b), c);
  const auto right = combine_stats(a, combine_stats(b, c));
  for (std::size_t i = 0; i < 3; ++i) CHECK(left.values[i] == doctest::Approx(right.values[i]).epsilon(1e-15));
  CHECK(left.weight == 4.0);

  CHECK(scale_stats(a, 1.0).values == a.values);
  const auto zero = scale_stats(a, 0.0);
  CHECK(zero.values == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(zero.weight == 0.0);
  const auto five = scale_stats(a, 10.0 / 2.0);
  CHECK(five.values == std::vector<double>{5.0, 10.0, 15.0});
  CHECK(five.weight == 5.0);
  CHECK_THROWS_AS(scale_stats(a, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(combine_stats(a, SuffStats::zeros(FamilyKind::dirichlet(4))), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 100; ++t) {
    for (auto* s : {&a, &b}) {
      for (double& v : s->values) v = u(rng);
    }
    const double k = std::abs(u(rng));
    const auto lhs = scale_stats(combine_stats(a, b), k);
    const auto rhs = combine_stats(scale_stats(a, k), scale_stats(b, k));
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(lhs.values[i] - rhs.values[i]) <= 1e-12 * std::max(1.0, std::abs(lhs.values[i])));
  }
}

TEST_CASE("Dirichlet mean_params is permutation-equivariant") {
  std::mt19937_64 rng(9);
  std::vector<double> p{0.4, 1.7, 3.0, 0.9, 2.2};
  const auto m = mean_params(NatParam(FamilyKind::dirichlet(5), p));
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  for (int t = 0; t < 10; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> q(5);
    for (std::size_t i = 0; i < 5; ++i) q[i] = p[perm[i]];
    const auto mq = mean_params(NatParam(FamilyKind::dirichlet(5), q));
    for (std::size_t i = 0; i < 5; ++i) CHECK(mq[i] == doctest::Approx(m[perm[i]]).epsilon(1e-14));
  }
}

TEST_CASE("KL divergence") {
  // Textbook Beta KL.
  auto beta_kl = [](double a1, double b1, double a2, double b2) {
    using boost::math::digamma;
    const double lb1 = std::lgamma(a1) + std::lgamma(b1) - std::lgamma(a1 + b1);
    const double lb2 = std::lgamma(a2) + std::lgamma(b2) - std::lgamma(a2 + b2);
    return lb2 - lb1 + (a1 - a2) * digamma(a1) + (b1 - b2) * digamma(b1) + (a2 - a1 + b2 - b1) * digamma(a1 + b1);
  };
  const std::vector<double> q{2.5, 0.7};
  const std::vector<double> p{1.0, 3.0};
  CHECK(kl_divergence(FamilyKind::beta(), q, p) == doctest::Approx(beta_kl(2.5, 0.7, 1.0, 3.0)).epsilon(1e-10));
  CHECK(kl_divergence(FamilyKind::beta(), q, q) == doctest::Approx(0.0));

  // Gaussian KL over the mean: N(m1, v1) against N(m2, v2).
  const double tau = 2.0;
  const std::vector<double> nq{tau * 1.0 * 4.0, 4.0};   // mean 1, var 1/8
  const std::vector<double> np{tau * -0.5 * 1.0, 1.0};  // mean -0.5, var 1/2
  const double v1 = 1.0 / 8.0;
  const double v2 = 0.5;
  const double oracle = 0.5 * (v1 / v2 + (1.0 + 0.5) * (1.0 + 0.5) / v2 - 1.0 + std::log(v2 / v1));
  CHECK(kl_divergence(FamilyKind::normal_mean({tau}), nq, np) == doctest::Approx(oracle).epsilon(1e-12));

  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto fam = FamilyKind::dirichlet(4);
    const auto a = random_values(fam, rng);
    const auto b = random_values(fam, rng);
    CHECK(kl_divergence(fam, a, b) >= -1e-12);
  }
}

TEST_CASE("enforce_floor clamps only positivity-constrained coordinates") {
  const Layout layout({FamilyKind::beta(), FamilyKind::gaussian({1.0}), FamilyKind::normal_mean({1.0})});
  std::vector<double> v{-1.0, 0.5, -3.0, -2.0, 0.0};
  CHECK(enforce_floor(layout, v, 1e-8) == 2);
  CHECK(v == std::vector<double>{1e-8, 0.5, -3.0, -2.0, 1e-8});
  CHECK(layout.size() == 5);
  CHECK(layout.offset(2) == 3);
}
