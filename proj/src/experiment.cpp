#include "shmpi/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"
#include "shmpi/topology.hpp"

namespace shmpi {

namespace {

namespace pt = boost::property_tree;
constexpr double pi = std::numbers::pi;

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string join_mm(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i] * 1e3);
  return out;
}

std::vector<double> split_mm(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      out.push_back(v * 1e-3);
    } catch (const std::logic_error&) {
      throw ConfigError("phantom.discs_mm: not a number: '" + item + "'");
    }
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

// Reads every key of the tree once; anything left over is an unknown key.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::string text(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    return tree_.get<std::string>(pt::ptree::path_type(key, '.'), fallback);
  }
  double real(const std::string& key, double fallback, double unit = 1.0) {
    const auto raw = text(key, "");
    if (raw.empty()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (raw.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(raw);
      return v * unit;
    } catch (const std::logic_error&) {
      throw ConfigError(key + ": not a number: '" + raw + "'");
    }
  }
  long long integer(const std::string& key, long long fallback) {
    const auto raw = text(key, "");
    if (raw.empty()) return fallback;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError(key + ": not an integer: '" + raw + "'");
    }
  }
  bool flag(const std::string& key, bool fallback) {
    const auto raw = text(key, "");
    return raw.empty() ? fallback : parse_bool(key, raw);
  }
  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key outside a section: " + section);
      for (const auto& [key, value] : body) {
        (void)value;
        if (!seen_.count(section + "." + key)) throw ConfigError("unknown config key " + section + "." + key);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

int positive_int(long long v, const char* name) {
  if (v < 1 || v > 1'000'000'000) throw ConfigError(std::string(name) + " must be a positive integer");
  return static_cast<int>(v);
}

GridSpec square_grid(int n, double fov, double slice) { return GridSpec::centered_plane(n, n, fov, fov, slice); }

}  // namespace

const char* to_string(SignalModel m) { return m == SignalModel::general ? "general" : "parallel"; }

SignalModel signal_model_from_string(const std::string& name) {
  if (name == "general") return SignalModel::general;
  if (name == "parallel") return SignalModel::parallel;
  throw ConfigError("unknown signal model '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (coefficient_file.empty()) {
    const auto t = topology_from_string(topology);
    if (t != Topology::rotating_ffl && t != Topology::static_ffl) {
      throw ConfigError("experiments need an FFL topology, got " + topology);
    }
  }
  if (!(gradient > 0.0) || !(drive_amplitude > 0.0)) throw ConfigError("gradient and drive amplitude must be positive");
  if (!(perturbation >= 0.0 && perturbation <= 0.2)) throw ConfigError("perturbation must lie in [0, 0.2]");
  if (!(validity_radius > 0.0)) throw ConfigError("validity radius must be positive");
  if (!(noise_level >= 0.0)) throw ConfigError("noise level must be non-negative");
  if (!(highpass_factor >= 0.0)) throw ConfigError("high-pass factor must be non-negative");
  if (fd_substeps < 1) throw ConfigError("fd_substeps must be >= 1");
  if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (nodes < 1) throw ConfigError("node count must be >= 1");
  if (!(fov > 0.0) || !(slice > 0.0)) throw ConfigError("FOV and slice thickness must be positive");
  if (signal_pixels < 1 || recon_pixels < 1) throw ConfigError("grid sizes must be positive");
  if (signal_subsampling < 1 || sysmat_subsampling < 1) throw ConfigError("subsampling must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (fbp_bins < 2 || fbp_decimation < 1) throw ConfigError("invalid FBP binning or decimation");
  if (!(fbp_nsr > 0.0)) throw ConfigError("fbp nsr must be positive");
  if (fbp_pad != 0.0 && fbp_pad < drive_amplitude / (2.0 * gradient)) {
    throw ConfigError("fbp pad half width is smaller than the scanned range d/2g");
  }
  for (double d : discs)
    if (!(d > 0.0)) throw ConfigError("disc diameters must be positive");
  make_acquisition(*this).validate();
  make_langevin(*this).validate();
}

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }
  Reader r(tree);
  ExperimentConfig c;
  c.topology = r.text("field.topology", c.topology);
  c.coefficient_file = r.text("field.coefficient_file", c.coefficient_file);
  c.gradient = r.real("field.gradient_T_per_m", c.gradient);
  c.drive_amplitude = r.real("field.drive_amplitude_mT", c.drive_amplitude, 1e-3);
  c.static_angle = r.real("field.static_angle_deg", c.static_angle, pi / 180.0);
  c.perturbation = r.real("field.perturbation", c.perturbation);
  c.perturbation_seed = static_cast<std::uint64_t>(r.integer("field.perturbation_seed", 7));
  c.validity_radius = r.real("field.validity_radius_mm", c.validity_radius, 1e-3);

  c.f_d = r.real("acquisition.drive_frequency_Hz", c.f_d);
  c.f_rot = r.real("acquisition.rotation_frequency_Hz", c.f_rot);
  c.sample_rate = r.real("acquisition.sample_rate_Hz", c.sample_rate);
  c.duration = r.real("acquisition.duration_ms", c.duration, 1e-3);
  c.noise_level = r.real("acquisition.noise_level", c.noise_level);
  c.noise_seed = static_cast<std::uint64_t>(r.integer("acquisition.noise_seed", 42));
  c.highpass_factor = r.real("acquisition.highpass_factor", c.highpass_factor);
  c.simulator = signal_model_from_string(r.text("acquisition.simulator", to_string(c.simulator)));
  c.fd_substeps = positive_int(r.integer("acquisition.fd_substeps", c.fd_substeps), "fd_substeps");

  c.m0 = r.real("magnetization.m0", c.m0);
  c.lambda = r.real("magnetization.lambda_per_T", c.lambda);
  c.threshold = r.real("magnetization.threshold_mT", c.threshold, 1e-3);
  c.nodes = positive_int(r.integer("magnetization.nodes", c.nodes), "nodes");
  c.scheme = scheme_from_string(r.text("magnetization.scheme", to_string(c.scheme)));
  c.node_strategy = node_strategy_from_string(r.text("magnetization.node_strategy", to_string(c.node_strategy)));

  c.fov = r.real("phantom.fov_mm", c.fov, 1e-3);
  const auto discs = r.text("phantom.discs_mm", "");
  if (!discs.empty()) c.discs = split_mm(discs);

  c.signal_pixels = positive_int(r.integer("grid.signal_pixels", c.signal_pixels), "signal_pixels");
  c.recon_pixels = positive_int(r.integer("grid.recon_pixels", c.recon_pixels), "recon_pixels");
  c.slice = r.real("grid.slice_mm", c.slice, 1e-3);
  c.signal_subsampling = positive_int(r.integer("grid.signal_subsampling", c.signal_subsampling), "signal_subsampling");
  c.sysmat_subsampling = positive_int(r.integer("grid.sysmat_subsampling", c.sysmat_subsampling), "sysmat_subsampling");
  const auto cap = r.integer("grid.nnz_cap", static_cast<long long>(c.nnz_cap));
  if (cap < 1) throw ConfigError("nnz_cap must be positive");
  c.nnz_cap = static_cast<std::size_t>(cap);

  c.iterations = positive_int(r.integer("solver.iterations", c.iterations), "iterations");

  c.fbp_bins = positive_int(r.integer("fbp.bins", c.fbp_bins), "fbp.bins");
  c.fbp_decimation = positive_int(r.integer("fbp.decimation", c.fbp_decimation), "fbp.decimation");
  c.fbp_cos_guard = r.real("fbp.cos_guard", c.fbp_cos_guard);
  c.fbp_deconvolve = r.flag("fbp.deconvolve", c.fbp_deconvolve);
  c.fbp_nsr = r.real("fbp.nsr", c.fbp_nsr);
  c.fbp_pad = r.real("fbp.pad_half_width_mm", c.fbp_pad, 1e-3);
  c.fbp_hann = r.flag("fbp.hann", c.fbp_hann);

  c.output_dir = r.text("output.directory", c.output_dir);
  r.reject_unknown();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::string s;
  auto line = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  s += "[field]\n";
  line("topology", c.topology);
  line("coefficient_file", c.coefficient_file);
  line("gradient_T_per_m", num(c.gradient));
  line("drive_amplitude_mT", num(c.drive_amplitude * 1e3));
  line("static_angle_deg", num(c.static_angle * 180.0 / pi));
  line("perturbation", num(c.perturbation));
  line("perturbation_seed", std::to_string(c.perturbation_seed));
  line("validity_radius_mm", num(c.validity_radius * 1e3));
  s += "\n[acquisition]\n";
  line("drive_frequency_Hz", num(c.f_d));
  line("rotation_frequency_Hz", num(c.f_rot));
  line("sample_rate_Hz", num(c.sample_rate));
  line("duration_ms", num(c.duration * 1e3));
  line("noise_level", num(c.noise_level));
  line("noise_seed", std::to_string(c.noise_seed));
  line("highpass_factor", num(c.highpass_factor));
  line("simulator", to_string(c.simulator));
  line("fd_substeps", std::to_string(c.fd_substeps));
  s += "\n[magnetization]\n";
  line("m0", num(c.m0));
  line("lambda_per_T", num(c.lambda));
  line("threshold_mT", num(c.threshold * 1e3));
  line("nodes", std::to_string(c.nodes));
  line("scheme", to_string(c.scheme));
  line("node_strategy", to_string(c.node_strategy));
  s += "\n[phantom]\n";
  line("fov_mm", num(c.fov * 1e3));
  line("discs_mm", join_mm(c.discs));
  s += "\n[grid]\n";
  line("signal_pixels", std::to_string(c.signal_pixels));
  line("recon_pixels", std::to_string(c.recon_pixels));
  line("slice_mm", num(c.slice * 1e3));
  line("signal_subsampling", std::to_string(c.signal_subsampling));
  line("sysmat_subsampling", std::to_string(c.sysmat_subsampling));
  line("nnz_cap", std::to_string(c.nnz_cap));
  s += "\n[solver]\n";
  line("iterations", std::to_string(c.iterations));
  s += "\n[fbp]\n";
  line("bins", std::to_string(c.fbp_bins));
  line("decimation", std::to_string(c.fbp_decimation));
  line("cos_guard", num(c.fbp_cos_guard));
  line("deconvolve", c.fbp_deconvolve ? "true" : "false");
  line("nsr", num(c.fbp_nsr));
  line("pad_half_width_mm", num(c.fbp_pad * 1e3));
  line("hann", c.fbp_hann ? "true" : "false");
  s += "\n[output]\n";
  line("directory", c.output_dir);
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.output_dir.clear();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_ini(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

FieldModel make_ideal_field(const ExperimentConfig& cfg) {
  TopologyParams p;
  p.gradient = cfg.gradient;
  p.drive_amplitude = cfg.drive_amplitude;
  p.drive_frequency = cfg.f_d;
  p.rotation_frequency = cfg.f_rot;
  p.angle = cfg.static_angle;
  return build_topology(topology_from_string(cfg.topology), p, cfg.validity_radius);
}

FieldModel make_field(const ExperimentConfig& cfg) {
  FieldModel base = cfg.coefficient_file.empty() ? make_ideal_field(cfg)
                                                 : load_field_coefficients(cfg.coefficient_file, cfg.validity_radius);
  return cfg.perturbation > 0.0 ? perturb_field(base, cfg.perturbation_seed, cfg.perturbation) : base;
}

LangevinParams make_langevin(const ExperimentConfig& cfg) { return {cfg.m0, cfg.lambda}; }

MagnetizationApprox make_approx(const ExperimentConfig& cfg) {
  const auto mag = make_langevin(cfg);
  return build_approx(mag, make_nodes(cfg.node_strategy, cfg.nodes, cfg.threshold, mag, cfg.scheme), cfg.threshold,
                      cfg.scheme);
}

AcquisitionConfig make_acquisition(const ExperimentConfig& cfg) {
  AcquisitionConfig a;
  a.f_d = cfg.f_d;
  a.f_rot = cfg.f_rot;
  a.sample_rate = cfg.sample_rate;
  a.duration = cfg.duration;
  a.t0 = -1.0 / (4.0 * cfg.f_d);
  a.highpass_cutoff = cfg.highpass_factor * cfg.f_d;
  return a;
}

std::vector<ReceiveCoil> make_coils() {
  std::vector<ReceiveCoil> coils(2);
  coils[0].sensitivity = Vec3(1, 0, 0);
  coils[1].sensitivity = Vec3(0, 1, 0);
  return coils;
}

GridSpec signal_grid(const ExperimentConfig& cfg) { return square_grid(cfg.signal_pixels, cfg.fov, cfg.slice); }
GridSpec recon_grid(const ExperimentConfig& cfg) { return square_grid(cfg.recon_pixels, cfg.fov, cfg.slice); }

std::vector<Disc> phantom_discs(const ExperimentConfig& cfg) {
  return disc_ring_layout(cfg.fov, cfg.discs, cfg.fov / cfg.signal_pixels);
}

ConcentrationGrid make_phantom(const ExperimentConfig& cfg) {
  return build_disc_phantom(cfg.fov, cfg.discs, signal_grid(cfg), cfg.fov / cfg.signal_pixels);
}

ConcentrationGrid reference_image(const ExperimentConfig& cfg) {
  constexpr int sub = 16;
  const auto spec = recon_grid(cfg);
  const auto discs = phantom_discs(cfg);
  ConcentrationGrid out(spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const Vec3 c = spec.center(k);
    int inside = 0;
    for (int i = 0; i < sub; ++i) {
      for (int j = 0; j < sub; ++j) {
        const Vec3 p = c + Vec3(((i + 0.5) / sub - 0.5) * spec.spacing.x(), ((j + 0.5) / sub - 0.5) * spec.spacing.y(), 0);
        for (const auto& d : discs) {
          if ((p - d.center).head<2>().norm() <= 0.5 * d.diameter) {
            ++inside;
            break;
          }
        }
      }
    }
    out.values[static_cast<Eigen::Index>(k)] = static_cast<double>(inside) / (sub * sub);
  }
  return out;
}

std::vector<SignalTrace> simulate_traces(const ExperimentConfig& cfg, const FieldModel& field,
                                         const ConcentrationGrid& phantom) {
  const auto acq = make_acquisition(cfg);
  const auto mag = make_langevin(cfg);
  const ForwardOptions opt{cfg.signal_subsampling, cfg.fd_substeps};
  std::vector<SignalTrace> out;
  const auto coils = make_coils();
  for (std::size_t k = 0; k < coils.size(); ++k) {
    out.push_back(cfg.simulator == SignalModel::general ? simulate_general(field, mag, phantom, coils[k], acq, opt)
                                                       : simulate_parallel(field, mag, phantom, coils[k], acq, opt));
    out.back().coil = static_cast<int>(k);
  }
  return out;
}

std::vector<SignalTrace> filter_traces(const ExperimentConfig& cfg, const std::vector<SignalTrace>& raw) {
  std::vector<SignalTrace> out;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double sigma = cfg.noise_level * rms(raw[k].samples);
    const auto noisy = sigma > 0.0 ? add_noise(raw[k], sigma, cfg.noise_seed + 1000003ull * k) : raw[k];
    out.push_back(apply_highpass(noisy, cfg.highpass_factor * cfg.f_d));
  }
  return out;
}

SystemMatrix build_experiment_matrix(const ExperimentConfig& cfg, const FieldModel& field,
                                     const MagnetizationApprox& approx) {
  const auto times = make_acquisition(cfg).times();
  const auto grid = recon_grid(cfg);
  SysmatOptions opt;
  opt.subsampling = cfg.sysmat_subsampling;
  opt.nnz_cap = cfg.nnz_cap;
  std::vector<SystemMatrix> blocks;
  for (const auto& coil : make_coils()) blocks.push_back(build_system_matrix(field, approx, coil, times, grid, opt));
  return stack_coils(blocks, {}).matrix;
}

AlgebraicResult reconstruct_algebraic(const ExperimentConfig& cfg, const SystemMatrix& s,
                                      const std::vector<SignalTrace>& filtered) {
  Eigen::VectorXd data(s.rows);
  Eigen::Index offset = 0;
  if (filtered.size() != s.block_rows.size()) throw ConfigError("one filtered trace per system matrix coil block needed");
  for (std::size_t k = 0; k < filtered.size(); ++k) {
    if (static_cast<Eigen::Index>(filtered[k].size()) != s.block_rows[k]) {
      throw ConfigError("trace length does not match the system matrix block");
    }
    for (std::size_t i = 0; i < filtered[k].size(); ++i) data[offset++] = filtered[k].samples[i];
  }
  const HighpassOperator op(s, cfg.highpass_factor * cfg.f_d);
  LsqrOptions opt;
  opt.max_iterations = cfg.iterations;
  AlgebraicResult r;
  r.lsqr = lsqr_solve(op, data, opt);
  r.image = ConcentrationGrid(s.grid, r.lsqr.x);
  return r;
}

FbpResult reconstruct_fbp(const ExperimentConfig& cfg, const std::vector<SignalTrace>& filtered) {
  SinogramOptions opt;
  opt.gradient = cfg.gradient;
  opt.drive_amplitude = cfg.drive_amplitude;
  opt.f_d = cfg.f_d;
  opt.f_rot = cfg.f_rot;
  opt.bins = cfg.fbp_bins;
  opt.cos_guard = cfg.fbp_cos_guard;
  opt.decimation = cfg.fbp_decimation;
  opt.deconvolve = cfg.fbp_deconvolve;
  opt.nsr = cfg.fbp_nsr;
  opt.mag = make_langevin(cfg);
  opt.slice_thickness = cfg.slice;
  FbpResult r;
  r.sinogram = signal_to_sinogram(filtered, make_coils(), opt);
  if (cfg.fbp_pad > 0.0) r.sinogram = zero_pad(r.sinogram, cfg.fbp_pad);
  FbpOptions fo;
  fo.hann = cfg.fbp_hann;
  r.image = fbp_reconstruct(r.sinogram, recon_grid(cfg), fo);
  return r;
}

ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto field = make_field(cfg);
  const auto filtered = filter_traces(cfg, simulate_traces(cfg, field, make_phantom(cfg)));
  const auto s = build_experiment_matrix(cfg, field, make_approx(cfg));
  ScenarioResult r;
  r.reference = reference_image(cfg);
  r.density = s.density();
  r.algebraic = reconstruct_algebraic(cfg, s, filtered);
  r.fbp = reconstruct_fbp(cfg, filtered);
  r.nrmse_algebraic = nrmse(r.algebraic.image, r.reference);
  r.nrmse_fbp = nrmse(r.fbp.image, r.reference);
  return r;
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  if (name == "threshold" || name == "b") return SweepParameter::threshold;
  if (name == "nodes" || name == "N") return SweepParameter::nodes;
  if (name == "scheme") return SweepParameter::scheme;
  throw ConfigError("unknown sweep parameter " + name);
}

const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::threshold: return "threshold";
    case SweepParameter::nodes: return "nodes";
    case SweepParameter::scheme: return "scheme";
  }
  return "?";
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, SweepParameter param,
                                  const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> variants;
  for (const auto& v : values) {
    ExperimentConfig c = cfg;
    try {
      switch (param) {
        case SweepParameter::threshold: c.threshold = std::stod(v) * 1e-3; break;
        case SweepParameter::nodes: c.nodes = std::stoi(v); break;
        case SweepParameter::scheme: {
          const auto dash = v.find('-');
          if (dash == std::string::npos) throw ConfigError("scheme values look like secant-equidistant");
          c.scheme = scheme_from_string(v.substr(0, dash));
          c.node_strategy = node_strategy_from_string(v.substr(dash + 1) == "l1" ? "l1_optimal" : v.substr(dash + 1));
          break;
        }
      }
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("bad {} sweep value '{}'", to_string(param), v));
    }
    c.validate();
    variants.push_back(c);
  }
  cfg.validate();
  const auto field = make_field(cfg);
  const auto filtered = filter_traces(cfg, simulate_traces(cfg, field, make_phantom(cfg)));
  const auto reference = reference_image(cfg);
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto s = build_experiment_matrix(variants[i], field, make_approx(variants[i]));
    auto rec = reconstruct_algebraic(variants[i], s, filtered);
    const double e = nrmse(rec.image, reference);
    spdlog::info("sweep {} = {}: NRMSE {:.4f}, density {:.3f}", to_string(param), values[i], e, s.density());
    out.push_back({values[i], e, std::move(rec.image), std::move(rec.lsqr.residuals)});
  }
  return out;
}

Vec3 profile_center(const ExperimentConfig& cfg) {
  const auto discs = phantom_discs(cfg);
  return discs.empty() ? Vec3::Zero() : discs.front().center;
}

void write_image_outputs(const std::filesystem::path& dir, const std::string& stem, const ConcentrationGrid& image,
                         const ConcentrationGrid& reference, const Vec3& center) {
  write_grid(dir / (stem + ".grid"), image);
  write_pgm(dir / (stem + ".pgm"), image);
  for (const auto& [axis, name, offset] :
       {std::tuple{Axis::horizontal, "h", center.y()}, std::tuple{Axis::vertical, "v", center.x()}}) {
    const auto p = profile_compare(image, reference, axis, offset);
    write_columns_csv(dir / fmt::format("{}_profile_{}.csv", stem, name), {"position", "reconstruction", "reference"},
                      {p.positions, p.reconstruction, p.reference});
  }
}

}  // namespace shmpi
