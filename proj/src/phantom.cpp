#include "shmpi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/os.h>

#include "shmpi/errors.hpp"

namespace shmpi {

std::vector<Disc> disc_ring_layout(double fov_diameter, std::vector<double> diameters, double pitch) {
  if (!(pitch > 0.0)) throw ConfigError("phantom lattice pitch must be positive");
  std::sort(diameters.begin(), diameters.end());
  std::vector<Disc> discs;
  const double ring = 0.25 * fov_diameter;
  const auto n = diameters.size();
  auto snap = [pitch](double v) { return (std::floor(v / pitch) + 0.5) * pitch; };
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 0.25 * std::numbers::pi +
                     2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    discs.push_back({Vec3(snap(ring * std::cos(a)), snap(ring * std::sin(a)), 0.0), diameters[i]});
  }
  return discs;
}

ConcentrationGrid rasterize_discs(const GridSpec& spec, const std::vector<Disc>& discs) {
  for (std::size_t i = 0; i < discs.size(); ++i) {
    if (!(discs[i].diameter > 0.0)) throw ConfigError("disc diameters must be positive");
    for (std::size_t j = i + 1; j < discs.size(); ++j) {
      const double gap = (discs[i].center - discs[j].center).norm();
      if (gap < 0.5 * (discs[i].diameter + discs[j].diameter)) {
        throw ConfigError(fmt::format("discs {} and {} overlap", i, j));
      }
    }
  }
  ConcentrationGrid grid(spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const Vec3 r = spec.center(k);
    for (const auto& d : discs) {
      const Vec3 off = r - d.center;
      // Relative slack keeps lattice points exactly on the rim inside despite rounding.
      if (off.x() * off.x() + off.y() * off.y() <= 0.25 * d.diameter * d.diameter * (1.0 + 1e-9)) {
        grid.values[k] = 1.0;
        break;
      }
    }
  }
  return grid;
}

ConcentrationGrid build_disc_phantom(double fov_diameter, const std::vector<double>& diameters,
                                     const GridSpec& spec, double pitch) {
  if (!(fov_diameter > 0.0)) throw ConfigError("phantom FOV diameter must be positive");
  const auto discs = disc_ring_layout(fov_diameter, diameters, pitch);
  for (const auto& d : discs) {
    if (d.center.norm() + 0.5 * d.diameter > 0.5 * fov_diameter) {
      throw ConfigError(fmt::format("disc of diameter {} m does not fit inside the FOV", d.diameter));
    }
  }
  return rasterize_discs(spec, discs);
}

Axis axis_from_string(const std::string& name) {
  if (name == "horizontal" || name == "x") return Axis::horizontal;
  if (name == "vertical" || name == "y") return Axis::vertical;
  throw ConfigError("unknown profile axis '" + name + "'");
}

std::vector<double> line_profile(const ConcentrationGrid& grid, Axis axis, double offset) {
  const auto& s = grid.spec;
  const int across = axis == Axis::horizontal ? 1 : 0;
  const double pos = (offset - s.origin[across]) / s.spacing[across];
  const long idx = std::lround(pos);
  if (!std::isfinite(pos) || idx < 0 || idx >= s.dims[across]) {
    throw std::domain_error(fmt::format("profile offset {} m lies outside the grid", offset));
  }
  std::vector<double> out;
  if (axis == Axis::horizontal) {
    for (int ix = 0; ix < s.dims[0]; ++ix) out.push_back(grid(ix, static_cast<int>(idx)));
  } else {
    for (int iy = 0; iy < s.dims[1]; ++iy) out.push_back(grid(static_cast<int>(idx), iy));
  }
  return out;
}

std::vector<double> profile_positions(const GridSpec& spec, Axis axis) {
  const int along = axis == Axis::horizontal ? 0 : 1;
  std::vector<double> out(spec.dims[along]);
  for (int i = 0; i < spec.dims[along]; ++i) out[i] = spec.origin[along] + i * spec.spacing[along];
  return out;
}

void write_grid(const std::filesystem::path& path, const ConcentrationGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write grid file " + path.string());
  const auto& s = grid.spec;
  out << fmt::format("{} {} {} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", s.dims[0], s.dims[1], s.dims[2],
                     s.spacing.x(), s.spacing.y(), s.spacing.z(), s.origin.x(), s.origin.y(), s.origin.z());
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

ConcentrationGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open grid file " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  GridSpec s;
  if (!(hs >> s.dims[0] >> s.dims[1] >> s.dims[2] >> s.spacing.x() >> s.spacing.y() >> s.spacing.z() >>
        s.origin.x() >> s.origin.y() >> s.origin.z())) {
    throw ParseError("malformed grid header", 1);
  }
  if (s.dims[0] < 1 || s.dims[1] < 1 || s.dims[2] < 1) throw ParseError("grid dimensions must be positive", 1);
  Eigen::VectorXd v(s.size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double))) {
    throw ParseError("grid file is truncated", 2);
  }
  return ConcentrationGrid(s, std::move(v));
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write image " + path.string());
  const double top = image.size() > 0 ? image.maxCoeff() : 0.0;
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = top > 0.0 ? std::clamp(image(r, c) / top, 0.0, 1.0) : 0.0;
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
      out.write(bytes, 2);
    }
  }
}

void write_pgm(const std::filesystem::path& path, const ConcentrationGrid& grid) {
  const auto& s = grid.spec;
  Eigen::MatrixXd image(s.dims[1], s.dims[0]);
  for (int iy = 0; iy < s.dims[1]; ++iy)
    for (int ix = 0; ix < s.dims[0]; ++ix) image(s.dims[1] - 1 - iy, ix) = grid(ix, iy);
  write_pgm(path, image);
}

void write_columns_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw std::invalid_argument("CSV column names and data disagree");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw std::invalid_argument("CSV columns have unequal lengths");
  }
  auto out = fmt::output_file(path.string());
  for (std::size_t j = 0; j < names.size(); ++j) out.print("{}{}", j ? "," : "", names[j]);
  out.print("\n");
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out.print("{}{:.17g}", j ? "," : "", columns[j][i]);
    out.print("\n");
  }
}

}  // namespace shmpi
