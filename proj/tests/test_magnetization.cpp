#include <doctest.h>

#include <cmath>
#include <random>

#include "shmpi/errors.hpp"
#include "shmpi/magnetization.hpp"

using namespace shmpi;

namespace {

// Reference values from 40-digit evaluation of coth(x) - 1/x and its derivatives.
constexpr double kL5 = 0.80009080398201937554;
constexpr double kL1em3 = 3.333333111111132275130e-4;
constexpr double kLp005 = 0.33333166667328040013;
constexpr double kLp3 = 0.10114676533996348051;
constexpr double kLpp002 = -0.0026663280707705167164;
constexpr double kLpp3 = -0.054046340455940593682;
constexpr double kLpp30 = -7.4074074074074074074e-5;

const LangevinParams kDefault{1.0, 2000.0};

// Composite Simpson rule for the L1 distance, fine enough to act as an oracle.
double simpson_l1(const LangevinParams& p, const MagnetizationApprox& a) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.slopes.size(); ++k) {
    const double lo = a.nodes[k], hi = a.nodes[k + 1];
    const int n = 4000;
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + i * h;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * std::abs(mbar_prime(p, x) - a.slopes[k]);
    }
    acc += s * h / 3.0;
  }
  return acc;
}

double dense_sup(const LangevinParams& p, const MagnetizationApprox& a, bool derivative) {
  const double b = a.threshold();
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = b * i / 100000.0;
    const double e = derivative ? mbar_prime(p, x) - eval_approx(a, x) : mbar(p, x) - eval_approx_antiderivative(a, x);
    worst = std::max(worst, std::abs(e));
  }
  return worst;
}

}  // namespace

TEST_CASE("Langevin function values") {
  CHECK(langevin_derivative(0.0) == 1.0 / 3.0);
  CHECK(langevin(0.0) == 0.0);
  CHECK(langevin(5.0) == doctest::Approx(kL5).epsilon(1e-14));
  CHECK(langevin(1e-3) == doctest::Approx(kL1em3).epsilon(1e-12));
  CHECK(langevin_derivative(0.005) == doctest::Approx(kLp005).epsilon(1e-13));
  CHECK(langevin_derivative(3.0) == doctest::Approx(kLp3).epsilon(1e-13));
  CHECK(langevin_second_derivative(0.02) == doctest::Approx(kLpp002).epsilon(1e-9));
  CHECK(langevin_second_derivative(3.0) == doctest::Approx(kLpp3).epsilon(1e-10));
  CHECK(langevin_second_derivative(30.0) == doctest::Approx(kLpp30).epsilon(1e-9));
  CHECK(langevin(800.0) == doctest::Approx(1.0 - 1.0 / 800.0));
  CHECK(langevin_derivative(800.0) == doctest::Approx(1.0 / (800.0 * 800.0)));
  CHECK(std::isfinite(langevin_second_derivative(900.0)));
}

TEST_CASE("Langevin symmetry and derivative consistency") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(langevin(-x) == -langevin(x));
    CHECK(langevin_derivative(-x) == langevin_derivative(x));
    const double h = 1e-5;
    CHECK(std::abs(langevin_derivative(x) - (langevin(x + h) - langevin(x - h)) / (2 * h)) < 1e-6);
    CHECK(std::abs(langevin_second_derivative(x) -
                   (langevin_derivative(x + h) - langevin_derivative(x - h)) / (2 * h)) < 1e-6);
  }
  // Continuity across the series branches.
  for (double x : {1e-4, 1e-2}) {
    CHECK(langevin(x * (1 - 1e-12)) == doctest::Approx(langevin(x * (1 + 1e-12))).epsilon(1e-11));
    CHECK(langevin_derivative(x * (1 - 1e-12)) == doctest::Approx(langevin_derivative(x * (1 + 1e-12))).epsilon(1e-11));
  }
}

TEST_CASE("mean magnetic moment") {
  CHECK(mbar_prime({1.0, 3.0}, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mbar(kDefault, 0.0) == 0.0);
  CHECK(std::abs(mbar({1.0, 100.0}, 1.0) - 0.99) < 1e-6);
  CHECK(mbar_prime(kDefault, 0.0) == doctest::Approx(2000.0 / 3.0));
  CHECK_THROWS_AS((LangevinParams{0.0, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((LangevinParams{1.0, -1.0}.validate()), ConfigError);
}

TEST_CASE("equidistant nodes") {
  CHECK(nodes_equidistant(3, 4.0) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(nodes_equidistant(0, 1.0).empty());
  CHECK_THROWS_AS(nodes_equidistant(-1, 1.0), std::domain_error);
  const auto a = build_approx(kDefault, {}, 0.01, Scheme::tangent);
  CHECK(a.nodes == std::vector<double>{0.0, 0.01});
  REQUIRE(a.slopes.size() == 1);
  CHECK(a.slopes[0] == doctest::Approx(2000.0 / 3.0));
  CHECK(eval_approx(a, 0.0099) == a.slopes[0]);
  CHECK(eval_approx(a, 0.01) == 0.0);
}

TEST_CASE("approximation structure") {
  for (auto scheme : {Scheme::secant, Scheme::tangent}) {
    const auto a = build_approx(kDefault, nodes_equidistant(7, 0.01), 0.01, scheme);
    CHECK(a.interior_count() == 7);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (int i = 0; i < 500; ++i) {
      const double x = u(rng);
      CHECK(eval_approx(a, -x) == eval_approx(a, x));
      CHECK(eval_approx_antiderivative(a, -x) == -eval_approx_antiderivative(a, x));
      if (std::abs(x) >= 0.01) CHECK(eval_approx(a, x) == 0.0);
    }
    for (std::size_t n = 0; n < a.slopes.size(); ++n) {
      const double lo = a.nodes[n], hi = a.nodes[n + 1];
      CHECK(a.slopes[n] >= 0.0);
      CHECK(eval_approx_antiderivative(a, hi) - eval_approx_antiderivative(a, lo) ==
            doctest::Approx(a.slopes[n] * (hi - lo)).epsilon(1e-13));
      // Piecewise constant inside each interval.
      CHECK(eval_approx(a, lo) == a.slopes[n]);
      CHECK(eval_approx(a, 0.5 * (lo + hi)) == a.slopes[n]);
      CHECK(eval_approx(a, std::nextafter(hi, 0.0)) == a.slopes[n]);
      if (scheme == Scheme::secant) {
        // Mean value theorem: the chord slope lies between the end derivatives.
        CHECK(a.slopes[n] <= mbar_prime(kDefault, lo));
        CHECK(a.slopes[n] >= mbar_prime(kDefault, hi));
      }
    }
  }
  CHECK_THROWS_AS(build_approx(kDefault, {0.002, 0.002}, 0.01, Scheme::secant), std::domain_error);
  CHECK_THROWS_AS(build_approx(kDefault, {0.004, 0.002}, 0.01, Scheme::secant), std::domain_error);
  CHECK_THROWS_AS(build_approx(kDefault, {0.02}, 0.01, Scheme::secant), std::domain_error);
}

TEST_CASE("approximation error bounds") {
  const double b = 0.01;
  for (auto scheme : {Scheme::secant, Scheme::tangent}) {
    for (auto strategy : {NodeStrategy::equidistant, NodeStrategy::l1_optimal}) {
      for (int n : {4, 8, 16, 32}) {
        const auto a = build_approx(kDefault, make_nodes(strategy, n, b, kDefault, scheme), b, scheme);
        const auto e = error_bounds(kDefault, a);
        const double d1 = dense_sup(kDefault, a, true);
        const double d2 = dense_sup(kDefault, a, false);
        CHECK(d1 <= e.derivative_bound);
        CHECK(d2 <= e.value_bound);
        // Exact sups agree with dense sampling from above.
        CHECK(sup_derivative_error(kDefault, a) >= d1 * (1 - 1e-12));
        CHECK(sup_derivative_error(kDefault, a) <= d1 * 1.01);
        CHECK(sup_antiderivative_error(kDefault, a) >= d2 * (1 - 1e-9));
        CHECK(sup_antiderivative_error(kDefault, a) <= d2 * 1.01);
      }
    }
  }
}

TEST_CASE("uniform convergence rate with equidistant nodes") {
  const double b = 0.01;
  for (auto scheme : {Scheme::secant, Scheme::tangent}) {
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
      const auto a = build_approx(kDefault, nodes_equidistant(n, b), b, scheme);
      const double err = dense_sup(kDefault, a, true);
      if (prev > 0.0) {
        const double ratio = prev / err;
        CHECK(ratio > 1.6);
        CHECK(ratio < 2.4);
      }
      prev = err;
    }
  }
}

TEST_CASE("L1 functional equals the L1 distance for midpoint slopes") {
  const double b = 0.01;
  for (int n : {0, 3, 8, 20}) {
    const auto nodes = nodes_equidistant(n, b);
    auto a = build_approx(kDefault, nodes, b, Scheme::tangent);
    a.slopes[0] = mbar_prime(kDefault, 0.5 * a.nodes[1]);
    const double f = l1_functional(kDefault, nodes, b);
    CHECK(f == doctest::Approx(simpson_l1(kDefault, a)).epsilon(1e-6));
    CHECK(f == doctest::Approx(l1_error(kDefault, a)).epsilon(1e-9));
  }
  // l1_error is exact for arbitrary slopes too.
  const auto s = build_approx(kDefault, nodes_equidistant(5, b), b, Scheme::secant);
  CHECK(l1_error(kDefault, s) == doctest::Approx(simpson_l1(kDefault, s)).epsilon(1e-6));
  const auto t = build_approx(kDefault, nodes_equidistant(5, b), b, Scheme::tangent);
  CHECK(l1_error(kDefault, t) == doctest::Approx(simpson_l1(kDefault, t)).epsilon(1e-6));
}

TEST_CASE("L1-optimal nodes") {
  const LangevinParams p{1.0, 200.0};
  const double b = 0.01;
  const auto eq = nodes_equidistant(8, b);
  const auto opt = nodes_l1_optimal(8, b, p, Scheme::tangent);
  REQUIRE(opt.size() == 8);
  CHECK(std::is_sorted(opt.begin(), opt.end()));
  CHECK(opt.front() > 0.0);
  CHECK(opt.back() < b);
  CHECK(l1_functional(p, opt, b) <= l1_functional(p, eq, b));
  for (double g : l1_functional_gradient(p, opt, b)) CHECK(std::abs(g) < 1e-10 * mbar_prime(p, 0.0));

  // Gradient of F agrees with finite differences.
  const auto grad = l1_functional_gradient(p, eq, b);
  for (std::size_t i = 0; i < eq.size(); ++i) {
    auto xp = eq, xm = eq;
    const double h = 1e-7;
    xp[i] += h;
    xm[i] -= h;
    CHECK(grad[i] == doctest::Approx((l1_functional(p, xp, b) - l1_functional(p, xm, b)) / (2 * h)).epsilon(1e-5));
  }

  // Secant: exact L1 error does not exceed the equidistant one.
  const auto sopt = nodes_l1_optimal(8, b, kDefault, Scheme::secant);
  CHECK(std::is_sorted(sopt.begin(), sopt.end()));
  CHECK(l1_error(kDefault, build_approx(kDefault, sopt, b, Scheme::secant)) <=
        l1_error(kDefault, build_approx(kDefault, nodes_equidistant(8, b), b, Scheme::secant)));
  CHECK(nodes_l1_optimal(0, b, p, Scheme::tangent).empty());
  CHECK(scheme_from_string("tangent") == Scheme::tangent);
  CHECK(node_strategy_from_string("l1_optimal") == NodeStrategy::l1_optimal);
  CHECK_THROWS_AS(scheme_from_string("chord"), ConfigError);
}

TEST_CASE("interval lookup") {
  const auto a = build_approx(kDefault, {0.001, 0.004, 0.007}, 0.01, Scheme::secant);
  CHECK(a.interval(0.0) == 0);
  CHECK(a.interval(0.001) == 1);
  CHECK(a.interval(-0.0045) == 2);
  CHECK(a.interval(0.00999) == 3);
  CHECK(a.interval(0.01) == -1);
  CHECK(a.interval(std::nan("")) == -1);
}
