#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "shmpi/errors.hpp"
#include "shmpi/recon.hpp"
#include "shmpi/sysmat.hpp"
#include "shmpi/topology.hpp"

using namespace shmpi;

namespace {

// 200 x 100: a diagonal block with entries in [1, 3] on top of a sparse random block.
Eigen::MatrixXd well_conditioned(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), diag(1.0, 3.0), pick(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(200, 100);
  for (int i = 0; i < 100; ++i) a(i, i) = diag(rng);
  for (int i = 100; i < 200; ++i)
    for (int j = 0; j < 100; ++j)
      if (pick(rng) < 0.05) a(i, j) = u(rng);
  return a;
}

bool non_increasing(const std::vector<double>& r) {
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i] > r[i - 1] * (1.0 + 1e-12)) return false;
  return true;
}

}  // namespace

TEST_CASE("LSQR recovers a well-conditioned system") {
  const Eigen::MatrixXd a = well_conditioned(3);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto sv = svd.singularValues();
  REQUIRE(sv(0) / sv(sv.size() - 1) < 100.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Eigen::VectorXd truth(100);
  for (auto& v : truth) v = n(rng);
  const Eigen::VectorXd b = a * truth;
  const Eigen::VectorXd direct = a.colPivHouseholderQr().solve(b);
  REQUIRE((direct - truth).norm() / truth.norm() < 1e-12);

  const DenseOperator op(a);
  LsqrOptions opt;
  opt.max_iterations = 100;
  opt.atol = opt.btol = 1e-15;
  const auto res = lsqr_solve(op, b, opt);
  CHECK((res.x - direct).norm() / direct.norm() < 1e-8);
  CHECK(res.iterations <= 100);
  CHECK(non_increasing(res.residuals));

  // Inconsistent right-hand side: the least-squares solution.
  Eigen::VectorXd noisy = b;
  for (auto& v : noisy) v += 0.1 * n(rng);
  const Eigen::VectorXd ls = a.colPivHouseholderQr().solve(noisy);
  const auto res2 = lsqr_solve(op, noisy, opt);
  CHECK((res2.x - ls).norm() / ls.norm() < 1e-8);
  CHECK(non_increasing(res2.residuals));
  for (std::size_t i = 0; i < res2.residuals.size(); ++i) {
    CHECK(res2.residual_estimates[i] == doctest::Approx(res2.residuals[i]).epsilon(1e-8));
  }
}

TEST_CASE("LSQR trivial cases") {
  const Eigen::MatrixXd a = well_conditioned(5);
  const DenseOperator op(a);
  const auto zero = lsqr_solve(op, Eigen::VectorXd::Zero(200));
  CHECK(zero.x.isZero(0.0));
  CHECK(zero.stop == LsqrStop::zero_rhs);
  CHECK_FALSE(zero.rank_warning);

  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(200, 100);
  const DenseOperator zop(z);
  const auto r = lsqr_solve(zop, Eigen::VectorXd::Ones(200));
  CHECK(r.x.isZero(0.0));
  CHECK(r.rank_warning);
  CHECK(r.stop == LsqrStop::zero_operator);

  CHECK_THROWS_AS(lsqr_solve(op, Eigen::VectorXd::Ones(10)), ConfigError);
  LsqrOptions bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(lsqr_solve(op, Eigen::VectorXd::Ones(200), bad), ConfigError);
}

TEST_CASE("LSQR is scale equivariant") {
  const Eigen::MatrixXd a = well_conditioned(6);
  const DenseOperator op(a);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(200, -1.0, 3.0);
  const auto r1 = lsqr_solve(op, b), r2 = lsqr_solve(op, 7.5 * b);
  REQUIRE(r1.iterations == r2.iterations);
  CHECK((r2.x - 7.5 * r1.x).norm() <= 1e-12 * r2.x.norm());
}

TEST_CASE("LSQR on a sparse MPI system") {
  TopologyParams p;
  p.gradient = 0.5;
  p.drive_amplitude = 0.05;
  p.drive_frequency = 25e3;
  p.rotation_frequency = 2e3;
  const auto model = build_topology(Topology::rotating_ffl, p);
  const LangevinParams mag{1.0, 2000.0};
  const auto approx = build_approx(mag, nodes_equidistant(30, 0.01), 0.01, Scheme::secant);
  AcquisitionConfig acq;
  acq.sample_rate = 2e6;
  const auto spec = GridSpec::centered_plane(24, 24, 0.1, 0.1);
  const auto S = stack_coils({build_system_matrix(model, approx, ReceiveCoil{Vec3(1, 0, 0)}, acq.times(), spec),
                              build_system_matrix(model, approx, ReceiveCoil{Vec3(0, 1, 0)}, acq.times(), spec)},
                             {})
                     .matrix;
  const auto truth = build_disc_phantom(0.1, {0.008, 0.01, 0.012, 0.014}, spec, 0.1 / 24);
  Eigen::VectorXd u = S.multiply(truth.values);
  const double sigma = 0.05 * u.norm() / std::sqrt(static_cast<double>(u.size()));
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& v : u) v += n(rng);

  const MatrixOperator op(S);
  std::vector<double> errors;
  LsqrOptions opt;
  opt.max_iterations = 120;
  opt.atol = opt.btol = 0.0;
  opt.on_iterate = [&](int, const Eigen::VectorXd& x) { errors.push_back(nrmse(x, truth.values)); };
  const auto res = lsqr_solve(op, u, opt);
  CHECK(non_increasing(res.residuals));
  const auto best = std::min_element(errors.begin(), errors.end()) - errors.begin();
  MESSAGE("error minimum at iteration " << best + 1 << ": " << errors[best] << ", final " << errors.back());
  CHECK(best + 1 <= 50);
  CHECK(errors.back() > errors[best]);

  // Same iterates through the high-pass wrapper with cutoff 0.
  const HighpassOperator hp(S, 0.0);
  LsqrOptions o20;
  const auto a = lsqr_solve(op, u, o20), b = lsqr_solve(hp, u, o20);
  CHECK((a.x - b.x).norm() <= 1e-12 * a.x.norm());
}

TEST_CASE("error metrics") {
  const auto spec = GridSpec::centered_plane(8, 8, 0.008, 0.008);
  ConcentrationGrid ref(spec, Eigen::VectorXd::LinSpaced(64, 0.0, 1.0));
  CHECK(nrmse(ref, ref) == 0.0);
  ConcentrationGrid twice(spec, 2.0 * ref.values);
  CHECK(nrmse(twice, ref) == doctest::Approx(1.0).epsilon(1e-15));
  const ConcentrationGrid other(GridSpec::centered_plane(4, 4, 0.008, 0.008));
  CHECK_THROWS_AS(nrmse(other, ref), ConfigError);
  CHECK_THROWS_AS(nrmse(ref, ConcentrationGrid(spec)), std::domain_error);

  const auto prof = profile_compare(twice, ref, Axis::horizontal, 0.0005);
  REQUIRE(prof.positions.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(prof.reconstruction[i] == 2.0 * prof.reference[i]);
  CHECK(prof.reference[3] == ref(3, 4));
  CHECK_THROWS_AS(profile_compare(other, ref, Axis::vertical, 0.0), ConfigError);
}
