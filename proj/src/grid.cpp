#include "shmpi/grid.hpp"

#include <stdexcept>

#include "shmpi/errors.hpp"

namespace shmpi {

std::array<int, 3> GridSpec::coords(std::size_t k) const {
  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto ny = static_cast<std::size_t>(dims[1]);
  return {static_cast<int>(k % nx), static_cast<int>((k / nx) % ny), static_cast<int>(k / (nx * ny))};
}

Vec3 GridSpec::center(std::size_t k) const {
  const auto c = coords(k);
  return {origin.x() + c[0] * spacing.x(), origin.y() + c[1] * spacing.y(),
          origin.z() + c[2] * spacing.z()};
}

GridSpec GridSpec::centered_plane(int nx, int ny, double fov_x, double fov_y, double dz) {
  if (nx < 1 || ny < 1 || !(fov_x > 0.0) || !(fov_y > 0.0) || !(dz > 0.0)) {
    throw ConfigError("grid dimensions and field of view must be positive");
  }
  GridSpec g;
  g.dims = {nx, ny, 1};
  g.spacing = Vec3(fov_x / nx, fov_y / ny, dz);
  g.origin = Vec3(-0.5 * fov_x + 0.5 * g.spacing.x(), -0.5 * fov_y + 0.5 * g.spacing.y(), 0.0);
  return g;
}

ConcentrationGrid::ConcentrationGrid(const GridSpec& s, Eigen::VectorXd v) : spec(s), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != spec.size()) {
    throw std::invalid_argument("concentration vector length does not match grid size");
  }
}

}  // namespace shmpi
