#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shmpi/field_model.hpp"
#include "shmpi/grid.hpp"

namespace shmpi {

/// Builds the ideal field of a scanner topology. general is rejected.
///
///   lissajous_ffp : g(-x,-y,2z) + (d_x sin 2pi f_x t, d_y sin 2pi f_y t, d_z sin 2pi f_z t)
///   line_ffp      : g(-x,-y,2z) + (d_x, d_y, d_z) sin 2pi f_d t
///   rotating_ffl  : Maxwell + Quad0 cos 2pi f_rot t + Quad45 sin 2pi f_rot t
///                   + x-drive d sin 2pi f_d t sin pi f_rot t - y-drive d sin 2pi f_d t cos pi f_rot t
///   static_ffl    : rotating_ffl with 2pi f_rot t replaced by the fixed angle alpha
FieldModel build_topology(Topology kind, const TopologyParams& params, double validity_radius = 0.05);

Topology topology_from_string(const std::string& name);

/// Field-free point of an FFP topology. Throws UnsupportedError otherwise.
Vec3 ffp_position(const FieldModel& model, double t);

struct LineLocus {
  Vec3 direction;   // unit
  Vec3 point;       // closest point to the origin
  double distance;  // signed distance along the normal
  Vec3 normal;      // (sin a, -cos a, 0), a the half rotation angle
};

/// Field-free line of an FFL topology. Throws UnsupportedError otherwise.
LineLocus ffl_locus(const FieldModel& model, double t);

/// Angle a with normal (sin a, -cos a, 0): pi f_rot t for the rotating FFL,
/// alpha/2 for the static FFL.
double ffl_half_angle(const FieldModel& model, double t);

/// Reads `j l m c kind f1 f2 phase scale` rows (j is 1-based); '#' starts a comment.
FieldModel load_field_coefficients(const std::filesystem::path& path, double validity_radius = 0.05);
FieldModel parse_field_coefficients(const std::string& text, double validity_radius = 0.05);
void write_field_coefficients(const FieldModel& model, const std::filesystem::path& path);
std::string format_field_coefficients(const FieldModel& model);

/// Adds seeded random degree 2..4 terms to the x and y components of every
/// modulation group. Each coefficient is uniform in
/// [-magnitude, magnitude] * F_q / R^l, where F_q is the largest |c| R^l over the
/// group's terms of degree <= 1, so that every added term stays below
/// magnitude * F_q on the validity sphere. magnitude must lie in [0, 0.2].
FieldModel perturb_field(const FieldModel& model, std::uint64_t seed, double magnitude);

/// Indices of cells whose center field magnitude lies in [lo, hi).
std::vector<std::size_t> lfv_mask(const FieldModel& model, double t, const GridSpec& grid, double lo,
                                  double hi);

}  // namespace shmpi
