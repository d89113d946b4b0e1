#include "shmpi/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"

namespace shmpi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Vec3 combine(const double* parts, const std::vector<double>& weights) {
  double bx = 0.0, by = 0.0, bz = 0.0;
  for (std::size_t q = 0; q < weights.size(); ++q) {
    bx += parts[3 * q] * weights[q];
    by += parts[3 * q + 1] * weights[q];
    bz += parts[3 * q + 2] * weights[q];
  }
  return {bx, by, bz};
}

}  // namespace

double TimeModulation::value(double t) const {
  const double a = kTwoPi * f1 * t + phase;
  switch (kind) {
    case ModulationKind::constant: return scale;
    case ModulationKind::sin: return scale * std::sin(a);
    case ModulationKind::cos: return scale * std::cos(a);
    case ModulationKind::sinsin: return scale * std::sin(a) * std::sin(std::numbers::pi * f2 * t);
    case ModulationKind::sincos: return scale * std::sin(a) * std::cos(std::numbers::pi * f2 * t);
  }
  return 0.0;
}

double TimeModulation::derivative(double t) const {
  const double a = kTwoPi * f1 * t + phase;
  const double w1 = kTwoPi * f1;
  const double b = std::numbers::pi * f2 * t;
  const double w2 = std::numbers::pi * f2;
  switch (kind) {
    case ModulationKind::constant: return 0.0;
    case ModulationKind::sin: return scale * w1 * std::cos(a);
    case ModulationKind::cos: return -scale * w1 * std::sin(a);
    case ModulationKind::sinsin:
      return scale * (w1 * std::cos(a) * std::sin(b) + w2 * std::sin(a) * std::cos(b));
    case ModulationKind::sincos:
      return scale * (w1 * std::cos(a) * std::cos(b) - w2 * std::sin(a) * std::sin(b));
  }
  return 0.0;
}

const char* to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::constant: return "const";
    case ModulationKind::sin: return "sin";
    case ModulationKind::cos: return "cos";
    case ModulationKind::sinsin: return "sinsin";
    case ModulationKind::sincos: return "sincos";
  }
  return "?";
}

ModulationKind modulation_kind_from_string(const std::string& name) {
  if (name == "const") return ModulationKind::constant;
  if (name == "sin") return ModulationKind::sin;
  if (name == "cos") return ModulationKind::cos;
  if (name == "sinsin") return ModulationKind::sinsin;
  if (name == "sincos") return ModulationKind::sincos;
  throw ConfigError("unknown modulation kind '" + name + "'");
}

const char* to_string(Topology topology) {
  switch (topology) {
    case Topology::general: return "general";
    case Topology::lissajous_ffp: return "lissajous_ffp";
    case Topology::line_ffp: return "line_ffp";
    case Topology::rotating_ffl: return "rotating_ffl";
    case Topology::static_ffl: return "static_ffl";
  }
  return "?";
}

FieldModel::FieldModel(std::vector<SHTerm> terms, double validity_radius)
    : FieldModel(std::move(terms), Topology::general, TopologyParams{}, validity_radius) {}

FieldModel::FieldModel(std::vector<SHTerm> terms, Topology topology, TopologyParams params,
                       double validity_radius)
    : terms_(std::move(terms)),
      validity_radius_(validity_radius),
      topology_(topology),
      params_(params) {
  if (!(validity_radius_ > 0.0)) throw ConfigError("validity radius must be positive");
  term_group_.reserve(terms_.size());
  for (const auto& term : terms_) {
    if (term.component < 0 || term.component > 2) {
      throw std::domain_error("field component index must be 0, 1 or 2");
    }
    if (term.degree < 0 || std::abs(term.order) > term.degree) {
      throw std::domain_error("spherical harmonic term requires |m| <= l");
    }
    if (!std::isfinite(term.coefficient)) throw std::domain_error("non-finite coefficient");
    max_degree_ = std::max(max_degree_, term.degree);
    auto it = std::find(groups_.begin(), groups_.end(), term.modulation);
    if (it == groups_.end()) {
      groups_.push_back(term.modulation);
      term_group_.push_back(groups_.size() - 1);
    } else {
      term_group_.push_back(static_cast<std::size_t>(it - groups_.begin()));
    }
  }
}

ModulationState FieldModel::modulation_state(double t) const {
  ModulationState state;
  state.value.reserve(groups_.size());
  state.rate.reserve(groups_.size());
  for (const auto& g : groups_) {
    state.value.push_back(g.value(t));
    state.rate.push_back(g.derivative(t));
  }
  return state;
}

void FieldModel::spatial_parts(const Vec3& r, std::span<double> out) const {
  std::fill(out.begin(), out.begin() + 3 * groups_.size(), 0.0);
  std::vector<double> table(harmonic_count(max_degree_));
  harmonic_polynomials(max_degree_, r, table);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& term = terms_[i];
    out[3 * term_group_[i] + term.component] +=
        term.coefficient * table[harmonic_index(term.degree, term.order)];
  }
}

Vec3 FieldModel::field(const Vec3& r, double t) const {
  std::vector<double> parts(3 * groups_.size());
  spatial_parts(r, parts);
  return combine(parts.data(), modulation_state(t).value);
}

Vec3 FieldModel::field_dt(const Vec3& r, double t) const {
  std::vector<double> parts(3 * groups_.size());
  spatial_parts(r, parts);
  return combine(parts.data(), modulation_state(t).rate);
}

PointBasis::PointBasis(const FieldModel& model, std::span<const Vec3> points)
    : count_(points.size()), groups_(model.group_count()), data_(3 * groups_ * points.size()) {
  std::size_t outside = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    model.spatial_parts(points[i], std::span<double>(data_.data() + 3 * groups_ * i, 3 * groups_));
    if (points[i].norm() > model.validity_radius()) ++outside;
  }
  if (outside > 0) {
    spdlog::debug("{} of {} evaluation points lie outside the expansion's validity sphere (R = {} m)",
                  outside, points.size(), model.validity_radius());
  }
}

Vec3 PointBasis::field(std::size_t i, const ModulationState& state) const {
  return combine(data_.data() + 3 * groups_ * i, state.value);
}

Vec3 PointBasis::field_dt(std::size_t i, const ModulationState& state) const {
  return combine(data_.data() + 3 * groups_ * i, state.rate);
}

}  // namespace shmpi
