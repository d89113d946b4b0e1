#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "shmpi/errors.hpp"
#include "shmpi/forward.hpp"
#include "shmpi/phantom.hpp"
#include "shmpi/topology.hpp"

using namespace shmpi;

namespace {

constexpr double pi = std::numbers::pi;

TopologyParams desk_params() {
  TopologyParams p;
  p.gradient = 0.5;
  p.drive_amplitude = 0.05;
  p.drive_amplitudes = Vec3(0.01, 0.012, 0.008);
  p.drive_frequency = 25e3;
  p.rotation_frequency = 2e3;
  return p;
}

// One drive period at 8 MHz, no rotation.
AcquisitionConfig short_acq() {
  AcquisitionConfig a;
  a.f_rot = 0.0;
  a.duration = 1.0 / a.f_d;
  return a;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

ConcentrationGrid random_grid(const GridSpec& spec, std::mt19937_64& rng, double density) {
  ConcentrationGrid c(spec);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index k = 0; k < c.values.size(); ++k) c.values[k] = u(rng) < density ? u(rng) : 0.0;
  return c;
}

ConcentrationGrid single_cell(double x, double y, double h = 1e-3) {
  GridSpec s = GridSpec::centered_plane(1, 1, h, h);
  s.origin = Vec3(x, y, 0.0);
  ConcentrationGrid c(s);
  c.values[0] = 1.0;
  return c;
}

}  // namespace

TEST_CASE("quadrature layout") {
  const auto spec = GridSpec::centered_plane(4, 3, 4e-3, 3e-3);
  const auto q = build_quadrature(spec, 3);
  REQUIRE(q.points.size() == 12 * 9);
  double total = 0.0;
  for (double w : q.weights) total += w;
  CHECK(total == doctest::Approx(spec.size() * spec.cell_volume()).epsilon(1e-14));
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    const Vec3 off = q.points[i] - spec.center(q.cell[i]);
    CHECK(std::abs(off.x()) < 0.5e-3);
    CHECK(std::abs(off.y()) < 0.5e-3);
    CHECK(off.z() == 0.0);
    if (i > 0) CHECK(q.cell[i] >= q.cell[i - 1]);
  }
  GridSpec cube;
  cube.dims = {2, 2, 2};
  CHECK(build_quadrature(cube, 2).points.size() == 64);
  CHECK_THROWS_AS(build_quadrature(spec, 0), ConfigError);
}

TEST_CASE("acquisition validation") {
  AcquisitionConfig a;
  CHECK(a.sample_count() == 4000);
  CHECK_NOTHROW(a.validate());
  CHECK(a.times()[1] - a.times()[0] == doctest::Approx(1.25e-7));
  a.duration = 3e-4;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = AcquisitionConfig{};
  a.sample_rate = 40e3;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  ReceiveCoil bad;
  bad.sensitivity = Vec3::Zero();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero concentration and static fields give zero traces") {
  const auto model = build_topology(Topology::static_ffl, desk_params());
  const LangevinParams mag{1.0, 2000.0};
  const auto approx = build_approx(mag, nodes_equidistant(30, 0.01), 0.01, Scheme::secant);
  const ReceiveCoil coil;
  const auto acq = short_acq();
  const ConcentrationGrid zero(GridSpec::centered_plane(8, 8, 0.04, 0.04));
  for (double v : simulate_general(model, mag, zero, coil, acq).samples) CHECK(v == 0.0);
  for (double v : simulate_parallel(model, mag, zero, coil, acq).samples) CHECK(v == 0.0);
  for (double v : simulate_piecewise(model, approx, zero, coil, acq).samples) CHECK(v == 0.0);

  std::vector<SHTerm> terms;
  for (const auto& t : model.terms()) {
    SHTerm s = t;
    s.modulation = TimeModulation{};
    terms.push_back(s);
  }
  const FieldModel frozen(terms, 0.05);
  auto c = zero;
  c.values.setOnes();
  for (double v : simulate_general(frozen, mag, c, coil, acq).samples) CHECK(v == 0.0);
  for (double v : simulate_parallel(frozen, mag, c, coil, acq).samples) CHECK(v == 0.0);
}

TEST_CASE("simulators are linear in the concentration") {
  const auto model = perturb_field(build_topology(Topology::rotating_ffl, desk_params()), 5, 0.1);
  const LangevinParams mag{1.0, 2000.0};
  const auto approx = build_approx(mag, nodes_equidistant(30, 0.01), 0.01, Scheme::tangent);
  const ReceiveCoil coil{Vec3(0.3, 1.0, 0.0)};
  AcquisitionConfig acq;
  acq.duration = 1.0 / acq.f_rot;
  acq.sample_rate = 2e6;
  const auto spec = GridSpec::centered_plane(12, 12, 0.06, 0.06);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const auto a = random_grid(spec, rng, 0.3), b = random_grid(spec, rng, 0.3);
    const double alpha = 1.7, beta = -0.6;
    const ConcentrationGrid mix(spec, alpha * a.values + beta * b.values);
    auto check = [&](auto sim) {
      const auto ua = sim(a).samples, ub = sim(b).samples, um = sim(mix).samples;
      std::vector<double> combo(ua.size());
      for (std::size_t i = 0; i < ua.size(); ++i) combo[i] = alpha * ua[i] + beta * ub[i];
      CHECK(rel_l2(um, combo) < 1e-12);
    };
    check([&](const ConcentrationGrid& c) { return simulate_parallel(model, mag, c, coil, acq); });
    check([&](const ConcentrationGrid& c) { return simulate_piecewise(model, approx, c, coil, acq); });
    check([&](const ConcentrationGrid& c) { return simulate_general(model, mag, c, coil, acq, {1, 2}); });
  }
  const auto a = random_grid(spec, rng, 0.5);
  const ConcentrationGrid twice(spec, 2.0 * a.values);
  const auto u1 = simulate_parallel(model, mag, a, coil, acq).samples;
  const auto u2 = simulate_parallel(model, mag, twice, coil, acq).samples;
  for (std::size_t i = 0; i < u1.size(); ++i) CHECK(u2[i] == 2.0 * u1[i]);
}

TEST_CASE("static FFL point source matches its closed form") {
  auto p = desk_params();
  p.angle = 0.7;
  const auto model = build_topology(Topology::static_ffl, p);
  const LangevinParams mag{1.0, 2000.0};
  const Vec3 e(std::sin(p.angle / 2), -std::cos(p.angle / 2), 0.0);
  const ReceiveCoil coil{Vec3(1.0, 0.4, 0.0)};
  const auto acq = short_acq();
  for (const Vec3 r0 : {Vec3(0.0, 0.0, 0.0), Vec3(0.012, -0.007, 0.0), Vec3(-0.03, 0.02, 0.0)}) {
    const auto c = single_cell(r0.x(), r0.y());
    const auto u = simulate_parallel(model, mag, c, coil, acq);
    std::vector<double> expected(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double w = 2 * pi * p.drive_frequency, t = u.time(i);
      const double bmag = std::abs(p.drive_amplitude * std::sin(w * t) - 2 * p.gradient * e.dot(r0));
      expected[i] = -kMu0 * 1e-9 * coil.sensitivity.dot(e) * p.drive_amplitude * w * std::cos(w * t) *
                    mbar_prime(mag, bmag);
    }
    CHECK(rel_l2(u.samples, expected) < 1e-12);
  }
}

TEST_CASE("1D FFP point source matches its closed form") {
  const auto p = desk_params();
  const auto model = build_topology(Topology::line_ffp, p);
  const LangevinParams mag{1.0, 2000.0};
  const ReceiveCoil coil{Vec3(1.0, 0.0, 0.0)};
  const auto acq = short_acq();
  const Eigen::DiagonalMatrix<double, 3> G(-p.gradient, -p.gradient, 2 * p.gradient);
  const auto c = single_cell(0.0, 0.0);
  const auto par = simulate_parallel(model, mag, c, coil, acq);
  const auto gen = simulate_general(model, mag, c, coil, acq, {1, 8});
  std::vector<double> expected(par.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    const double w = 2 * pi * p.drive_frequency, t = par.time(i);
    // The drive vector is dB/dt / (2 pi f_d cos); the FFP sits where G r = -drive sin.
    const Vec3 r_ffp = ffp_position(model, t);
    expected[i] = -kMu0 * 1e-9 * w * std::cos(w * t) * coil.sensitivity.dot(p.drive_amplitudes) *
                  mbar_prime(mag, (G * (Vec3::Zero() - r_ffp)).norm());
  }
  CHECK(rel_l2(par.samples, expected) < 1e-12);
  CHECK(rel_l2(gen.samples, expected) < 0.02);
}

TEST_CASE("general model converges to the parallel model on the static FFL") {
  const auto model = build_topology(Topology::static_ffl, desk_params());
  const LangevinParams mag{1.0, 2000.0};
  const ReceiveCoil coil{Vec3(0.0, 1.0, 0.0)};
  const auto acq = short_acq();
  const auto c = single_cell(0.004, 0.011);
  const auto ref = simulate_parallel(model, mag, c, coil, acq).samples;
  double prev = 1.0;
  for (int sub : {1, 2, 4, 8, 16}) {
    const double err = rel_l2(simulate_general(model, mag, c, coil, acq, {1, sub}).samples, ref);
    CHECK(err < prev);
    if (sub >= 4) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.15));
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("piecewise model") {
  const auto model = build_topology(Topology::rotating_ffl, desk_params());
  const LangevinParams mag{1.0, 2000.0};
  const ReceiveCoil coil;
  AcquisitionConfig acq;
  const auto c = build_disc_phantom(0.1, {0.004, 0.006, 0.008, 0.01}, GridSpec::centered_plane(100, 100, 0.1, 0.1));
  const auto ref = simulate_parallel(model, mag, c, coil, acq).samples;
  double prev = 1.0;
  for (int n : {8, 30, 120}) {
    const auto approx = build_approx(mag, nodes_equidistant(n, 0.02), 0.02, Scheme::secant);
    const double err = rel_l2(simulate_piecewise(model, approx, c, coil, acq).samples, ref);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);

  // The static FFL at alpha = 0 sweeps |y| <= d / 2g = 50 mm; at y = 70 mm |B| >= 2g * 20 mm = 20 mT.
  const auto still = build_topology(Topology::static_ffl, desk_params());
  const auto far = single_cell(0.0, 0.07);
  const auto approx = build_approx(mag, nodes_equidistant(8, 0.01), 0.01, Scheme::secant);
  for (double v : simulate_piecewise(still, approx, far, coil, short_acq()).samples) CHECK(v == 0.0);
}

TEST_CASE("row assembler reproduces the piecewise trace") {
  const auto model = perturb_field(build_topology(Topology::rotating_ffl, desk_params()), 2, 0.05);
  const LangevinParams mag{1.0, 2000.0};
  const auto approx = build_approx(mag, nodes_equidistant(30, 0.01), 0.01, Scheme::secant);
  const ReceiveCoil coil{Vec3(0.0, 1.0, 0.0)};
  AcquisitionConfig acq;
  const auto spec = GridSpec::centered_plane(20, 20, 0.1, 0.1);
  std::mt19937_64 rng(4);
  const auto c = random_grid(spec, rng, 0.4);
  const auto u = simulate_piecewise(model, approx, c, coil, acq, {2, 1});
  const PiecewiseRowAssembler rows(model, coil, approx, spec, 2);
  CHECK(rows.cols() == spec.size());
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::size_t j = 0; j < u.size(); j += 37) {
    entries.clear();
    rows.row(u.time(j), entries);
    double acc = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) CHECK(entries[i].first > entries[i - 1].first);
      CHECK(entries[i].second != 0.0);
      acc += entries[i].second * c.values[entries[i].first];
    }
    CHECK(acc == u.samples[j]);
  }
}

TEST_CASE("high-pass filter") {
  const double fs = 8e6, fd = 25e3;
  const std::size_t n = 3200;
  std::vector<double> tone(n), harmonic(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    tone[i] = std::sin(2 * pi * fd * t + 0.3);
    harmonic[i] = std::cos(2 * pi * 2 * fd * t - 1.1);
  }
  auto a = tone, b = harmonic;
  highpass_inplace(a.data(), n, fs, 1.4 * fd);
  highpass_inplace(b.data(), n, fs, 1.4 * fd);
  double na = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    na += a[i] * a[i];
    nt += tone[i] * tone[i];
  }
  CHECK(std::sqrt(na / nt) < 1e-10);
  CHECK(rel_l2(b, harmonic) < 1e-10);

  SignalTrace tr{tone, fs, 0.0, 0};
  CHECK(apply_highpass(tr, 0.0).samples == tone);
  CHECK_THROWS(highpass_inplace(a.data(), 1, fs, 1.0));
}

TEST_CASE("noise") {
  SignalTrace tr{std::vector<double>(20000, 1.0), 8e6, 0.0, 0};
  CHECK(add_noise(tr, 0.0, 3).samples == tr.samples);
  const auto a = add_noise(tr, 0.1, 3), b = add_noise(tr, 0.1, 3), c = add_noise(tr, 0.1, 4);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  std::vector<double> diff(tr.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.samples[i] - 1.0;
  CHECK(rms(diff) == doctest::Approx(0.1).epsilon(0.03));
  CHECK_THROWS_AS(add_noise(tr, -1.0, 0), ConfigError);
}

TEST_CASE("trace files") {
  const auto dir = std::filesystem::temp_directory_path() / "shmpi_test_forward";
  std::filesystem::create_directories(dir);
  SignalTrace tr{{0.25, -1.0 / 3.0, 7e-9, 0.0}, 8e6, -1e-5, 1};
  write_trace_binary(dir / "u.bin", tr);
  const auto back = read_trace(dir / "u.bin");
  CHECK(back.samples == tr.samples);
  CHECK(back.sample_rate == tr.sample_rate);
  CHECK(back.t0 == tr.t0);
  CHECK(back.coil == 1);
  write_trace_csv(dir / "u.csv", tr);
  const auto csv = read_trace(dir / "u.csv");
  CHECK(csv.samples == tr.samples);
  CHECK(csv.sample_rate == doctest::Approx(8e6).epsilon(1e-9));
  CHECK(csv.t0 == tr.t0);
  CHECK_THROWS_AS(read_trace(dir / "missing.bin"), MissingInputError);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,volts\n0,1\nx,2\n";
  }
  CHECK_THROWS_AS(read_trace(dir / "bad.csv"), ParseError);
  std::filesystem::remove_all(dir);
}
