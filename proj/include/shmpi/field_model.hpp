#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shmpi/spherical_harmonics.hpp"

namespace shmpi {

enum class ModulationKind { constant, sin, cos, sinsin, sincos };

/// Scalar time factor of a spherical-harmonic term.
///
///   constant : scale
///   sin      : scale * sin(2 pi f1 t + phase)
///   cos      : scale * cos(2 pi f1 t + phase)
///   sinsin   : scale * sin(2 pi f1 t + phase) * sin(pi f2 t)
///   sincos   : scale * sin(2 pi f1 t + phase) * cos(pi f2 t)
///
/// The product kinds follow the drive/rotation factorisation of a rotating
/// field-free line: f1 is the drive frequency, f2 the rotation frequency.
struct TimeModulation {
  ModulationKind kind = ModulationKind::constant;
  double f1 = 0.0;
  double f2 = 0.0;
  double phase = 0.0;
  double scale = 1.0;

  double value(double t) const;
  /// Closed-form d/dt of value().
  double derivative(double t) const;

  bool operator==(const TimeModulation&) const = default;
};

const char* to_string(ModulationKind kind);
ModulationKind modulation_kind_from_string(const std::string& name);

/// One term c * p_{l,m}(r) * modulation(t) of field component `component`
/// (0 = x, 1 = y, 2 = z). Coefficient in tesla * m^-l.
struct SHTerm {
  int component = 0;
  int degree = 0;
  int order = 0;
  double coefficient = 0.0;
  TimeModulation modulation;

  bool operator==(const SHTerm&) const = default;
};

enum class Topology { general, lissajous_ffp, line_ffp, rotating_ffl, static_ffl };

const char* to_string(Topology topology);

/// Construction parameters of the ideal topologies (SI units).
struct TopologyParams {
  double gradient = 1.0;                 // g, T/m
  double drive_amplitude = 0.01;         // d for FFL topologies, T
  Vec3 drive_amplitudes{0.01, 0.01, 0.01};   // (d_x, d_y, d_z) for FFP topologies, T
  Vec3 drive_frequencies{25e3, 25e3, 25e3};  // (f_x, f_y, f_z) for the Lissajous FFP, Hz
  double drive_frequency = 25e3;         // f_d, Hz
  double rotation_frequency = 100.0;     // f_rot, Hz
  double angle = 0.0;                    // alpha of the static FFL, rad
};

/// Modulation values and rates of every distinct modulation group at one instant.
struct ModulationState {
  std::vector<double> value;
  std::vector<double> rate;
};

/// Time-varying field written as a sum of spherical-harmonic terms. Immutable.
class FieldModel {
 public:
  FieldModel() = default;
  explicit FieldModel(std::vector<SHTerm> terms, double validity_radius = 0.05);
  FieldModel(std::vector<SHTerm> terms, Topology topology, TopologyParams params,
             double validity_radius = 0.05);

  const std::vector<SHTerm>& terms() const { return terms_; }
  int max_degree() const { return max_degree_; }
  double validity_radius() const { return validity_radius_; }
  Topology topology() const { return topology_; }
  const TopologyParams& topology_params() const { return params_; }

  /// Distinct modulations in order of first appearance.
  const std::vector<TimeModulation>& modulation_groups() const { return groups_; }
  ModulationState modulation_state(double t) const;

  Vec3 field(const Vec3& r, double t) const;
  Vec3 field_dt(const Vec3& r, double t) const;

  /// Spatial part of every modulation group at r: out[3*q + j].
  void spatial_parts(const Vec3& r, std::span<double> out) const;
  std::size_t group_count() const { return groups_.size(); }
  std::size_t term_group(std::size_t term) const { return term_group_[term]; }

 private:
  std::vector<SHTerm> terms_;
  std::vector<TimeModulation> groups_;
  std::vector<std::size_t> term_group_;
  int max_degree_ = 0;
  double validity_radius_ = 0.05;
  Topology topology_ = Topology::general;
  TopologyParams params_;
};

/// A field model restricted to a fixed point set: the spatial factors are
/// evaluated once, so each evaluation costs one small dot product per group.
class PointBasis {
 public:
  PointBasis(const FieldModel& model, std::span<const Vec3> points);

  std::size_t size() const { return count_; }
  Vec3 field(std::size_t i, const ModulationState& state) const;
  Vec3 field_dt(std::size_t i, const ModulationState& state) const;

 private:
  std::size_t count_ = 0;
  std::size_t groups_ = 0;
  std::vector<double> data_;
};

}  // namespace shmpi
