#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shmpi/grid.hpp"

namespace shmpi {

struct Disc {
  Vec3 center;
  double diameter;
};

/// Discs sorted by increasing diameter, centers on a ring of radius fov/4 at
/// angles pi/4 + 2 pi k/n counterclockwise from the +x axis. Center
/// coordinates are then moved to the nearest point (i + 1/2) * pitch, so that
/// they coincide with cell centers of any centered grid of that pitch.
std::vector<Disc> disc_ring_layout(double fov_diameter, std::vector<double> diameters, double pitch = 1e-3);

/// Cells whose center lies inside (or on) any disc get value 1, all others 0.
/// Throws ConfigError for overlapping discs.
ConcentrationGrid rasterize_discs(const GridSpec& spec, const std::vector<Disc>& discs);

/// Ring-layout disc phantom; discs must fit inside the FOV circle.
ConcentrationGrid build_disc_phantom(double fov_diameter, const std::vector<double>& diameters,
                                     const GridSpec& spec, double pitch = 1e-3);

enum class Axis { horizontal, vertical };
Axis axis_from_string(const std::string& name);

/// Row (horizontal, at y = offset) or column (vertical, at x = offset) of the
/// z = 0 slice nearest to `offset`.
std::vector<double> line_profile(const ConcentrationGrid& grid, Axis axis, double offset);
/// Cell-center coordinates along the profile.
std::vector<double> profile_positions(const GridSpec& spec, Axis axis);

/// Text header `nx ny nz sx sy sz ox oy oz` followed by raw little-endian doubles.
void write_grid(const std::filesystem::path& path, const ConcentrationGrid& grid);
ConcentrationGrid read_grid(const std::filesystem::path& path);

/// 16-bit binary PGM of the z = 0 slice, +y up. Scaled so the maximum maps to
/// 65535; negative values are clipped to 0.
void write_pgm(const std::filesystem::path& path, const ConcentrationGrid& grid);
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image);

/// CSV with a header row; all columns must have equal length. Numbers use 17 significant digits.
void write_columns_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns);

}  // namespace shmpi
