#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "shmpi/errors.hpp"
#include "shmpi/phantom.hpp"

using namespace shmpi;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "shmpi_test_phantom";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Cells of the grid within distance r of c (rim included), counted independently of the rasterizer.
int count_in_disc(const GridSpec& s, const Vec3& c, double r) {
  int n = 0;
  for (int iy = 0; iy < s.dims[1]; ++iy)
    for (int ix = 0; ix < s.dims[0]; ++ix) {
      const double x = s.origin.x() + ix * s.spacing.x() - c.x();
      const double y = s.origin.y() + iy * s.spacing.y() - c.y();
      if (std::hypot(x, y) <= r * (1.0 + 1e-9)) ++n;
    }
  return n;
}

const std::vector<double> kDiameters{0.004, 0.006, 0.008, 0.010};

}  // namespace

TEST_CASE("disc phantom areas") {
  const auto spec = GridSpec::centered_plane(100, 100, 0.1, 0.1);
  const auto grid = build_disc_phantom(0.1, kDiameters, spec);
  const auto discs = disc_ring_layout(0.1, kDiameters);
  REQUIRE(discs.size() == 4);
  double total = 0.0;
  for (const auto& d : discs) {
    const double expected = std::numbers::pi * 0.25 * d.diameter * d.diameter / (1e-3 * 1e-3);
    const int counted = count_in_disc(spec, d.center, 0.5 * d.diameter);
    CHECK(std::abs(counted - expected) <= 0.1 * expected);
    total += counted;
  }
  CHECK(grid.values.sum() == total);
  for (Eigen::Index k = 0; k < grid.values.size(); ++k) CHECK((grid.values[k] == 0.0 || grid.values[k] == 1.0));

  CHECK(build_disc_phantom(0.1, {}, spec).values.sum() == 0.0);
}

TEST_CASE("ring layout") {
  const auto discs = disc_ring_layout(0.1, {0.010, 0.004, 0.008, 0.006});
  CHECK(discs[0].diameter == 0.004);
  CHECK(discs[3].diameter == 0.010);
  CHECK((discs[0].center - Vec3(0.0175, 0.0175, 0)).norm() < 1e-15);
  CHECK((discs[1].center - Vec3(-0.0175, 0.0175, 0)).norm() < 1e-15);
  CHECK((discs[3].center - Vec3(0.0175, -0.0175, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(build_disc_phantom(0.1, {0.06}, GridSpec::centered_plane(10, 10, 0.1, 0.1)), ConfigError);
  CHECK_THROWS_AS(rasterize_discs(GridSpec::centered_plane(10, 10, 0.1, 0.1),
                                  {{Vec3(0, 0, 0), 0.01}, {Vec3(0.008, 0, 0), 0.01}}),
                  ConfigError);
}

TEST_CASE("small disc on a grid node") {
  const auto spec = GridSpec::centered_plane(21, 21, 0.021, 0.021);
  const Vec3 node = spec.center(spec.index(10, 10));
  const auto g = rasterize_discs(spec, {{node, 2e-3}});
  CHECK(g.values.sum() >= 1.0);
  CHECK(g.values.sum() <= 9.0);
}

TEST_CASE("rasterization is resolution consistent") {
  // From 0.5 mm spacing on; at 1 mm the lattice count of a 6 mm disc alone
  // fluctuates by more than 10 %.
  const auto coarse = GridSpec::centered_plane(200, 200, 0.1, 0.1);
  const auto fine = GridSpec::centered_plane(400, 400, 0.1, 0.1);
  const auto discs = disc_ring_layout(0.1, kDiameters);
  for (const auto& d : discs) {
    const double exact = std::numbers::pi * 0.25 * d.diameter * d.diameter;
    const auto gc = rasterize_discs(coarse, {d});
    const auto gf = rasterize_discs(fine, {d});
    const double ac = gc.values.sum() * coarse.spacing.x() * coarse.spacing.y();
    const double af = gf.values.sum() * fine.spacing.x() * fine.spacing.y();
    CHECK(std::abs(ac - af) / exact < 0.05);
    CHECK(std::abs(af - exact) / exact < 0.05);
  }
}

TEST_CASE("line profiles") {
  const auto spec = GridSpec::centered_plane(100, 100, 0.1, 0.1);
  CHECK(line_profile(ConcentrationGrid(spec), Axis::horizontal, 0.0) == std::vector<double>(100, 0.0));
  const Vec3 c = spec.center(spec.index(30, 60));
  const auto g = rasterize_discs(spec, {{c, 0.010}});
  const auto p = line_profile(g, Axis::horizontal, c.y());
  double ones = 0;
  for (double v : p) ones += v;
  CHECK(ones >= 9);
  CHECK(ones <= 11);
  const auto v = line_profile(g, Axis::vertical, c.x());
  CHECK(v.size() == 100);
  CHECK(std::accumulate(v.begin(), v.end(), 0.0) == ones);

  // Equal discs on the ring are mirror images about the y axis.
  const auto ring = build_disc_phantom(0.1, std::vector<double>(4, 0.006), spec);
  auto pv = line_profile(ring, Axis::horizontal, 0.0175);
  const auto pm = line_profile(ring, Axis::horizontal, -0.0175);
  CHECK(pv == pm);
  CHECK(std::accumulate(pv.begin(), pv.end(), 0.0) > 0.0);
  std::reverse(pv.begin(), pv.end());
  CHECK(pv == pm);
  CHECK_THROWS_AS(line_profile(g, Axis::vertical, 0.2), std::domain_error);
  CHECK(profile_positions(spec, Axis::horizontal).front() == doctest::Approx(-0.0495));
}

TEST_CASE("grid and image files") {
  const auto spec = GridSpec::centered_plane(7, 5, 0.07, 0.05);
  ConcentrationGrid g(spec);
  for (Eigen::Index k = 0; k < g.values.size(); ++k) g.values[k] = std::sin(0.3 * k) / 3.0;
  const auto path = temp_path("g.bin");
  write_grid(path, g);
  const auto back = read_grid(path);
  CHECK(back.spec == spec);
  CHECK(back.values == g.values);
  CHECK_THROWS_AS(read_grid(temp_path("missing.bin")), MissingInputError);

  const auto pgm = temp_path("g.pgm");
  write_pgm(pgm, g);
  std::ifstream in(pgm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  CHECK(magic == "P5");
  CHECK(w == 7);
  CHECK(h == 5);
  CHECK(maxval == 65535);
  std::vector<unsigned char> bytes(2 * 35);
  in.read(reinterpret_cast<char*>(bytes.data()), 70);
  CHECK(in.gcount() == 70);
  // Negative entries clip to zero.
  int zeros = 0;
  for (int i = 0; i < 35; ++i) zeros += (bytes[2 * i] == 0 && bytes[2 * i + 1] == 0);
  int negatives = 0;
  for (Eigen::Index k = 0; k < g.values.size(); ++k) negatives += g.values[k] <= 0.0;
  CHECK(zeros == negatives);

  const auto csv = temp_path("p.csv");
  write_columns_csv(csv, {"x", "v"}, {{0.1, 0.2}, {1.0 / 3.0, 2.0}});
  std::ifstream cin(csv);
  std::string l1, l2;
  std::getline(cin, l1);
  std::getline(cin, l2);
  CHECK(l1 == "x,v");
  CHECK(l2 == "0.10000000000000001,0.33333333333333331");
}
