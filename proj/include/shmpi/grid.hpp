#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Core>

#include "shmpi/spherical_harmonics.hpp"

namespace shmpi {

/// Regular cell grid. origin is the center of cell (0,0,0); cells are
/// numbered x-fastest.
struct GridSpec {
  std::array<int, 3> dims{1, 1, 1};
  Vec3 spacing{1e-3, 1e-3, 1e-3};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int ix, int iy, int iz = 0) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(dims[0]) * (iy + static_cast<std::size_t>(dims[1]) * iz);
  }
  std::array<int, 3> coords(std::size_t k) const;
  Vec3 center(std::size_t k) const;
  double cell_volume() const { return spacing.x() * spacing.y() * spacing.z(); }
  bool planar() const { return dims[2] == 1; }

  /// n_x x n_y planar grid covering [-fov_x/2, fov_x/2] x [-fov_y/2, fov_y/2]
  /// in the z = 0 plane; slice thickness dz.
  static GridSpec centered_plane(int nx, int ny, double fov_x, double fov_y, double dz = 1e-3);

  bool operator==(const GridSpec& o) const {
    return dims == o.dims && spacing == o.spacing && origin == o.origin;
  }
};

/// Pixel-basis concentration c(r) = sum_k c_k chi_{Q_k}(r).
struct ConcentrationGrid {
  GridSpec spec;
  Eigen::VectorXd values;

  ConcentrationGrid() = default;
  explicit ConcentrationGrid(const GridSpec& s) : spec(s), values(Eigen::VectorXd::Zero(s.size())) {}
  ConcentrationGrid(const GridSpec& s, Eigen::VectorXd v);

  double& operator()(int ix, int iy, int iz = 0) { return values[spec.index(ix, iy, iz)]; }
  double operator()(int ix, int iy, int iz = 0) const { return values[spec.index(ix, iy, iz)]; }
};

}  // namespace shmpi
