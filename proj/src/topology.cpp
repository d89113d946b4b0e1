#include "shmpi/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"

namespace shmpi {

namespace {

constexpr double kPi = std::numbers::pi;

TimeModulation constant(double scale = 1.0) { return {ModulationKind::constant, 0.0, 0.0, 0.0, scale}; }
TimeModulation sine(double f, double scale = 1.0) { return {ModulationKind::sin, f, 0.0, 0.0, scale}; }
TimeModulation cosine(double f) { return {ModulationKind::cos, f, 0.0, 0.0, 1.0}; }

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive, got {}", what, v));
}

void selection_terms(std::vector<SHTerm>& terms, double g, const TimeModulation& mod) {
  terms.push_back({0, 1, 1, -g, mod});
  terms.push_back({1, 1, -1, -g, mod});
  terms.push_back({2, 1, 0, 2.0 * g, mod});
}

void quad0_terms(std::vector<SHTerm>& terms, double g, const TimeModulation& mod) {
  terms.push_back({0, 1, 1, g, mod});
  terms.push_back({1, 1, -1, -g, mod});
}

void quad45_terms(std::vector<SHTerm>& terms, double g, const TimeModulation& mod) {
  terms.push_back({0, 1, -1, g, mod});
  terms.push_back({1, 1, 1, g, mod});
}

bool is_ffl(Topology t) { return t == Topology::rotating_ffl || t == Topology::static_ffl; }

}  // namespace

Topology topology_from_string(const std::string& name) {
  for (auto t : {Topology::general, Topology::lissajous_ffp, Topology::line_ffp, Topology::rotating_ffl,
                 Topology::static_ffl}) {
    if (name == to_string(t)) return t;
  }
  throw ConfigError("unknown field topology '" + name + "'");
}

FieldModel build_topology(Topology kind, const TopologyParams& p, double validity_radius) {
  require_positive(p.gradient, "gradient strength g");
  const double g = p.gradient;
  std::vector<SHTerm> terms;
  switch (kind) {
    case Topology::lissajous_ffp:
      for (int j = 0; j < 3; ++j) require_positive(p.drive_frequencies[j], "drive frequency");
      selection_terms(terms, g, constant());
      for (int j = 0; j < 3; ++j) terms.push_back({j, 0, 0, p.drive_amplitudes[j], sine(p.drive_frequencies[j])});
      break;
    case Topology::line_ffp:
      require_positive(p.drive_frequency, "drive frequency");
      selection_terms(terms, g, constant());
      for (int j = 0; j < 3; ++j) terms.push_back({j, 0, 0, p.drive_amplitudes[j], sine(p.drive_frequency)});
      break;
    case Topology::rotating_ffl: {
      require_positive(p.drive_frequency, "drive frequency");
      require_positive(p.rotation_frequency, "rotation frequency");
      selection_terms(terms, g, constant());
      quad0_terms(terms, g, cosine(p.rotation_frequency));
      quad45_terms(terms, g, {ModulationKind::sin, p.rotation_frequency, 0.0, 0.0, 1.0});
      terms.push_back({0, 0, 0, p.drive_amplitude,
                       {ModulationKind::sinsin, p.drive_frequency, p.rotation_frequency, 0.0, 1.0}});
      terms.push_back({1, 0, 0, p.drive_amplitude,
                       {ModulationKind::sincos, p.drive_frequency, p.rotation_frequency, 0.0, -1.0}});
      break;
    }
    case Topology::static_ffl: {
      require_positive(p.drive_frequency, "drive frequency");
      const double a = p.angle;
      selection_terms(terms, g, constant());
      quad0_terms(terms, g, constant(std::cos(a)));
      quad45_terms(terms, g, constant(std::sin(a)));
      terms.push_back({0, 0, 0, p.drive_amplitude, sine(p.drive_frequency, std::sin(0.5 * a))});
      terms.push_back({1, 0, 0, p.drive_amplitude, sine(p.drive_frequency, -std::cos(0.5 * a))});
      break;
    }
    case Topology::general:
      throw ConfigError("build_topology needs a concrete scanner topology");
  }
  return FieldModel(std::move(terms), kind, p, validity_radius);
}

Vec3 ffp_position(const FieldModel& model, double t) {
  const auto& p = model.topology_params();
  const double g = p.gradient;
  if (model.topology() == Topology::lissajous_ffp) {
    Vec3 r;
    for (int j = 0; j < 3; ++j) r[j] = p.drive_amplitudes[j] / g * std::sin(2.0 * kPi * p.drive_frequencies[j] * t);
    r.z() *= -0.5;
    return r;
  }
  if (model.topology() == Topology::line_ffp) {
    const Vec3 v(p.drive_amplitudes.x() / g, p.drive_amplitudes.y() / g, -p.drive_amplitudes.z() / (2.0 * g));
    return v * std::sin(2.0 * kPi * p.drive_frequency * t);
  }
  throw UnsupportedError(fmt::format("ffp_position is undefined for topology {}", to_string(model.topology())));
}

double ffl_half_angle(const FieldModel& model, double t) {
  const auto& p = model.topology_params();
  if (model.topology() == Topology::rotating_ffl) return kPi * p.rotation_frequency * t;
  if (model.topology() == Topology::static_ffl) return 0.5 * p.angle;
  throw UnsupportedError(fmt::format("no field-free line for topology {}", to_string(model.topology())));
}

LineLocus ffl_locus(const FieldModel& model, double t) {
  if (!is_ffl(model.topology())) {
    throw UnsupportedError(fmt::format("ffl_locus is undefined for topology {}", to_string(model.topology())));
  }
  const auto& p = model.topology_params();
  const double a = ffl_half_angle(model, t);
  LineLocus locus;
  locus.direction = Vec3(std::cos(a), std::sin(a), 0.0);
  locus.normal = Vec3(std::sin(a), -std::cos(a), 0.0);
  locus.distance = p.drive_amplitude / (2.0 * p.gradient) * std::sin(2.0 * kPi * p.drive_frequency * t);
  locus.point = locus.distance * locus.normal;
  return locus;
}

FieldModel parse_field_coefficients(const std::string& text, double validity_radius) {
  std::istringstream in(text);
  std::string line;
  std::vector<SHTerm> terms;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    std::istringstream row(line);
    int j = 0, l = 0, m = 0;
    double c = 0.0, f1 = 0.0, f2 = 0.0, phase = 0.0, scale = 1.0;
    std::string kind;
    if (!(row >> j >> l >> m >> c >> kind >> f1 >> f2 >> phase >> scale)) {
      throw ParseError("expected 'j l m c kind f1 f2 phase scale'", lineno);
    }
    std::string extra;
    if (row >> extra) throw ParseError("trailing token '" + extra + "'", lineno);
    if (j < 1 || j > 3) throw ParseError("component index j must be 1, 2 or 3", lineno);
    if (l < 0 || std::abs(m) > l) throw ParseError(fmt::format("invalid order m={} for degree l={}", m, l), lineno);
    if (!std::isfinite(c)) throw ParseError("coefficient is not finite", lineno);
    TimeModulation mod;
    try {
      mod.kind = modulation_kind_from_string(kind);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
    mod.f1 = f1;
    mod.f2 = f2;
    mod.phase = phase;
    mod.scale = scale;
    terms.push_back({j - 1, l, m, c, mod});
  }
  return FieldModel(std::move(terms), validity_radius);
}

FieldModel load_field_coefficients(const std::filesystem::path& path, double validity_radius) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open coefficient file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_field_coefficients(buf.str(), validity_radius);
}

std::string format_field_coefficients(const FieldModel& model) {
  std::string out = "# j l m c kind f1 f2 phase scale\n";
  for (const auto& t : model.terms()) {
    const auto& md = t.modulation;
    out += fmt::format("{} {} {} {:.17g} {} {:.17g} {:.17g} {:.17g} {:.17g}\n", t.component + 1, t.degree,
                       t.order, t.coefficient, to_string(md.kind), md.f1, md.f2, md.phase, md.scale);
  }
  return out;
}

void write_field_coefficients(const FieldModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write coefficient file " + path.string());
  out << format_field_coefficients(model);
}

FieldModel perturb_field(const FieldModel& model, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0 && magnitude <= 0.2)) {
    throw ConfigError(fmt::format("perturbation magnitude must lie in [0, 0.2], got {}", magnitude));
  }
  if (magnitude == 0.0) return model;
  const double R = model.validity_radius();
  const auto& groups = model.modulation_groups();
  std::vector<double> reference(groups.size(), 0.0);
  for (std::size_t i = 0; i < model.terms().size(); ++i) {
    const auto& t = model.terms()[i];
    if (t.degree <= 1) {
      auto& ref = reference[model.term_group(i)];
      ref = std::max(ref, std::abs(t.coefficient) * std::pow(R, t.degree));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<SHTerm> terms = model.terms();
  for (std::size_t q = 0; q < groups.size(); ++q) {
    for (int component = 0; component < 2; ++component) {
      for (int l = 2; l <= 4; ++l) {
        for (int m = -l; m <= l; ++m) {
          const double c = unit(rng) * magnitude * reference[q] / std::pow(R, l);
          if (c != 0.0) terms.push_back({component, l, m, c, groups[q]});
        }
      }
    }
  }
  return FieldModel(std::move(terms), Topology::general, model.topology_params(), R);
}

std::vector<std::size_t> lfv_mask(const FieldModel& model, double t, const GridSpec& grid, double lo, double hi) {
  if (!(lo >= 0.0) || !(lo < hi)) throw std::domain_error("lfv_mask requires 0 <= lo < hi");
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double b = model.field(grid.center(k), t).norm();
    if (b >= lo && b < hi) cells.push_back(k);
  }
  return cells;
}

}  // namespace shmpi
