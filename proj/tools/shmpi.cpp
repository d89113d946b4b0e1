#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"
#include "shmpi/experiment.hpp"
#include "shmpi/topology.hpp"

using namespace shmpi;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, config_error = 2, missing_input = 3, hash_mismatch = 4, resource_cap = 5, failure = 1 };

struct Common {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
  bool verbose = false;
};

const char* coil_name(std::size_t k) { return k == 0 ? "x" : "y"; }

// `section.key=value` overrides replace keys of the loaded config.
ExperimentConfig resolve_config(const Common& c) {
  std::string text;
  fs::path source = c.config;
  if (source.empty() && !c.out.empty() && fs::exists(fs::path(c.out) / "config.ini")) source = fs::path(c.out) / "config.ini";
  if (!source.empty()) {
    std::ifstream in(source);
    if (!in) throw MissingInputError("cannot open config " + source.string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    spdlog::debug("config from {}", source.string());
  }
  ExperimentConfig cfg = parse_config(text);
  if (!c.overrides.empty()) {
    std::string merged = to_ini(cfg);
    for (const auto& o : c.overrides) {
      const auto eq = o.find('=');
      const auto dot = o.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override must look like section.key=value: " + o);
      }
      const std::string section = o.substr(0, dot), key = o.substr(dot + 1, eq - dot - 1), value = o.substr(eq + 1);
      // Replace the key inside its section.
      std::istringstream in(merged);
      std::string line, cur, rebuilt;
      bool done = false;
      while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[') cur = line.substr(1, line.find(']') - 1);
        if (!done && cur == section && line.rfind(key + " = ", 0) == 0) {
          line = key + " = " + value;
          done = true;
        }
        rebuilt += line + "\n";
      }
      if (!done) throw ConfigError("unknown config key " + section + "." + key);
      merged = rebuilt;
    }
    cfg = parse_config(merged);
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

// Written only after a stage succeeded, so a failed override does not stick.
void record_config(const ExperimentConfig& cfg) {
  std::ofstream(prepare_output(cfg) / "config.ini") << "# config_hash = " << hash_hex(config_hash(cfg)) << "\n"
                                                    << to_ini(cfg);
}

void write_meta(const fs::path& artifact, const std::string& stage, const ExperimentConfig& cfg) {
  std::ofstream out(artifact.string() + ".meta");
  out << "stage = " << stage << "\nconfig_hash = " << hash_hex(config_hash(cfg)) << "\n---\n" << to_ini(cfg);
}

void check_meta(const fs::path& artifact, const ExperimentConfig& cfg, bool force) {
  if (!fs::exists(artifact)) throw MissingInputError("missing pipeline artifact " + artifact.string());
  std::ifstream in(artifact.string() + ".meta");
  if (!in) throw MissingInputError("missing metadata for " + artifact.string());
  std::string line, hash;
  while (std::getline(in, line) && line != "---")
    if (line.rfind("config_hash = ", 0) == 0) hash = line.substr(14);
  const auto expected = hash_hex(config_hash(cfg));
  if (hash != expected) {
    if (!force) {
      throw HashMismatchError(fmt::format("{} was produced under config {}, current config is {} (use --force)",
                                          artifact.string(), hash, expected));
    }
    spdlog::warn("using {} despite config hash mismatch", artifact.string());
  }
}

std::vector<SignalTrace> load_traces(const fs::path& dir, const std::string& prefix, const ExperimentConfig& cfg,
                                     bool force) {
  std::vector<SignalTrace> out;
  for (std::size_t k = 0; k < make_coils().size(); ++k) {
    const auto path = dir / fmt::format("{}_{}.trace", prefix, coil_name(k));
    check_meta(path, cfg, force);
    out.push_back(read_trace(path));
    out.back().coil = static_cast<int>(k);
  }
  return out;
}

void save_traces(const fs::path& dir, const std::string& prefix, const std::string& stage,
                 const std::vector<SignalTrace>& traces, const ExperimentConfig& cfg) {
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto stem = dir / fmt::format("{}_{}", prefix, coil_name(k));
    write_trace_binary(stem.string() + ".trace", traces[k]);
    write_trace_csv(stem.string() + ".csv", traces[k]);
    write_meta(stem.string() + ".trace", stage, cfg);
  }
}

std::uint64_t expected_system_hash(const ExperimentConfig& cfg, const FieldModel& field,
                                   const MagnetizationApprox& approx) {
  const auto times = make_acquisition(cfg).times();
  std::vector<std::uint64_t> hashes;
  for (const auto& coil : make_coils())
    hashes.push_back(system_hash(field, approx, coil, times, recon_grid(cfg), cfg.sysmat_subsampling));
  return combine_hashes(hashes);
}

void stage_phantom(const ExperimentConfig& cfg) {
  const auto dir = prepare_output(cfg);
  const auto ph = make_phantom(cfg);
  write_grid(dir / "phantom.grid", ph);
  write_pgm(dir / "phantom.pgm", ph);
  const auto ref = reference_image(cfg);
  write_grid(dir / "reference.grid", ref);
  write_pgm(dir / "reference.pgm", ref);
  write_meta(dir / "reference.grid", "phantom", cfg);
  const auto c = profile_center(cfg);
  for (const auto& [axis, name, offset] : {std::tuple{Axis::horizontal, "h", c.y()}, std::tuple{Axis::vertical, "v", c.x()}}) {
    write_columns_csv(dir / fmt::format("reference_profile_{}.csv", name), {"position", "reference"},
                      {profile_positions(ref.spec, axis), line_profile(ref, axis, offset)});
  }
  spdlog::info("phantom: {} active signal cells, reference mass {:.3f}", ph.values.sum(), ref.values.sum());
}

void stage_simulate(const ExperimentConfig& cfg) {
  stage_phantom(cfg);
  const fs::path dir = cfg.output_dir;
  const auto traces = simulate_traces(cfg, make_field(cfg), make_phantom(cfg));
  save_traces(dir, "raw", "simulate", traces, cfg);
  for (std::size_t k = 0; k < traces.size(); ++k)
    spdlog::info("simulate: coil {} RMS {:.6g} V over {} samples", coil_name(k), rms(traces[k].samples), traces[k].size());
}

void stage_filter(const ExperimentConfig& cfg, bool force) {
  const auto dir = prepare_output(cfg);
  const auto filtered = filter_traces(cfg, load_traces(dir, "raw", cfg, force));
  save_traces(dir, "trace", "filter", filtered, cfg);
  spdlog::info("filter: noise level {} of RMS, high-pass below {:.0f} Hz", cfg.noise_level, cfg.highpass_factor * cfg.f_d);
}

void stage_sysmat(const ExperimentConfig& cfg) {
  const auto dir = prepare_output(cfg);
  const auto s = build_experiment_matrix(cfg, make_field(cfg), make_approx(cfg));
  write_system_matrix(dir / "sysmat.bin", s);
  write_meta(dir / "sysmat.bin", "sysmat", cfg);
  spdlog::info("sysmat: {} x {}, nnz {} (density {:.3f})", s.rows, s.cols, s.nnz(), s.density());
}

void stage_lsqr(const ExperimentConfig& cfg, bool force) {
  const auto dir = prepare_output(cfg);
  const auto field = make_field(cfg);
  const auto approx = make_approx(cfg);
  const auto path = dir / "sysmat.bin";
  if (!fs::exists(path)) throw MissingInputError("missing pipeline artifact " + path.string() + " (run sysmat first)");
  const auto s = read_system_matrix(path, expected_system_hash(cfg, field, approx), force);
  const auto traces = load_traces(dir, "trace", cfg, force);
  const auto res = reconstruct_algebraic(cfg, s, traces);
  write_image_outputs(dir, "algebraic", res.image, reference_image(cfg), profile_center(cfg));
  write_meta(dir / "algebraic.grid", "lsqr", cfg);
  write_residuals_csv(dir / "residuals.csv", res.lsqr);
  spdlog::info("lsqr: {} iterations, stop {}, residual {:.6g} -> {:.6g}", res.lsqr.iterations, to_string(res.lsqr.stop),
               res.lsqr.residuals.front(), res.lsqr.residuals.back());
}

void stage_fbp(const ExperimentConfig& cfg, bool force) {
  const auto dir = prepare_output(cfg);
  const auto res = reconstruct_fbp(cfg, load_traces(dir, "trace", cfg, force));
  write_sinogram_csv(dir / "sinogram.csv", res.sinogram);
  write_sinogram_pgm(dir / "sinogram.pgm", res.sinogram);
  write_image_outputs(dir, "fbp", res.image, reference_image(cfg), profile_center(cfg));
  write_meta(dir / "fbp.grid", "fbp", cfg);
  spdlog::info("fbp: {} projections x {} bins", res.sinogram.angles.size(), res.sinogram.displacements.size());
}

int stage_compare(const ExperimentConfig& cfg, const std::string& image, const std::string& reference) {
  if (!image.empty() || !reference.empty()) {
    if (image.empty() || reference.empty()) throw ConfigError("compare needs both --image and --reference");
    const double e = nrmse(read_grid(image), read_grid(reference));
    fmt::print("nrmse,{:.17g}\n", e);
    return ok;
  }
  const fs::path dir = cfg.output_dir;
  const auto ref = reference_image(cfg);
  std::vector<std::string> names;
  std::vector<double> errors;
  for (const char* method : {"algebraic", "fbp"}) {
    const auto path = dir / (std::string(method) + ".grid");
    if (!fs::exists(path)) continue;
    names.push_back(method);
    errors.push_back(nrmse(read_grid(path), ref));
  }
  if (names.empty()) throw MissingInputError("no reconstructions in " + dir.string() + " (run lsqr or fbp first)");
  std::ofstream out(dir / "report.csv");
  out << "method,nrmse\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << fmt::format("{},{:.17g}\n", names[i], errors[i]);
    fmt::print("{},{:.17g}\n", names[i], errors[i]);
  }
  return ok;
}

void stage_sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<std::string>& values) {
  const auto dir = prepare_output(cfg);
  const auto p = sweep_parameter_from_string(param);
  const auto points = run_sweep(cfg, p, values);
  const auto ref = reference_image(cfg);
  std::vector<double> idx, err;
  std::ofstream summary(dir / fmt::format("sweep_{}.csv", to_string(p)));
  summary << "value,nrmse\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    write_image_outputs(dir, fmt::format("sweep_{}_{}", to_string(p), points[i].label), points[i].image, ref,
                        profile_center(cfg));
    summary << fmt::format("{},{:.17g}\n", points[i].label, points[i].nrmse);
    fmt::print("{} = {}: NRMSE {:.4f}\n", to_string(p), points[i].label, points[i].nrmse);
  }
}

void stage_field_info(const ExperimentConfig& cfg, double t) {
  const auto dir = prepare_output(cfg);
  const auto field = make_field(cfg);
  write_field_coefficients(field, dir / "field.txt");
  fmt::print("terms {}  max degree {}  modulation groups {}\n", field.terms().size(), field.max_degree(),
             field.group_count());
  const auto grid = recon_grid(cfg);
  const auto lfv = lfv_mask(field, t, grid, 0.0, cfg.threshold);
  fmt::print("t = {:.6g} s: {} of {} recon cells below b = {} mT ({:.1f} %)\n", t, lfv.size(), grid.size(),
             cfg.threshold * 1e3, 100.0 * static_cast<double>(lfv.size()) / static_cast<double>(grid.size()));
  const Vec3 b0 = field.field(Vec3::Zero(), t);
  fmt::print("B(0, t) = ({:.6g}, {:.6g}, {:.6g}) T\n", b0.x(), b0.y(), b0.z());
  if (field.topology() == Topology::rotating_ffl || field.topology() == Topology::static_ffl) {
    const auto line = ffl_locus(field, t);
    fmt::print("FFL normal ({:.6f}, {:.6f}), distance {:.6g} m\n", line.normal.x(), line.normal.y(), line.distance);
  }
}

void run_all(const ExperimentConfig& cfg, bool force) {
  const auto start = std::chrono::steady_clock::now();
  stage_simulate(cfg);
  stage_filter(cfg, force);
  stage_sysmat(cfg);
  stage_lsqr(cfg, force);
  stage_fbp(cfg, force);
  stage_compare(cfg, "", "");
  spdlog::info("pipeline finished in {:.1f} s",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based reconstruction for field-free-line magnetic particle imaging"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("-c,--config", common.config, "INI configuration (default: <out>/config.ini if present)");
  app.add_option("-o,--out", common.out, "output directory, overrides output.directory");
  app.add_option("-s,--set", common.overrides, "override a key, e.g. --set magnetization.threshold_mT=4");
  app.add_flag("--force", common.force, "use artifacts despite a config hash mismatch");
  app.add_flag("-v,--verbose", common.verbose, "debug logging");

  auto* simulate = app.add_subcommand("simulate", "phantom and raw coil voltages");
  auto* filter = app.add_subcommand("filter", "noise and high-pass");
  auto* sysmat = app.add_subcommand("sysmat", "stacked system matrix on the recon grid");
  auto* lsqr = app.add_subcommand("lsqr", "algebraic reconstruction");
  auto* fbp = app.add_subcommand("fbp", "sinogram and filtered back projection");
  auto* compare = app.add_subcommand("compare", "NRMSE against the reference");
  std::string image, reference;
  compare->add_option("--image", image, "grid file to evaluate");
  compare->add_option("--reference", reference, "reference grid file");
  auto* sweep = app.add_subcommand("sweep", "algebraic reconstructions over one parameter");
  std::string param;
  std::vector<std::string> values;
  sweep->add_option("parameter", param, "threshold (mT), nodes or scheme")->required();
  sweep->add_option("values", values, "e.g. 1 2 3 4 5 10, or secant-equidistant tangent-l1")->required();
  auto* phantom = app.add_subcommand("phantom", "phantom and reference image");
  auto* field_info = app.add_subcommand("field-info", "field summary and coefficient export");
  double t = 0.0;
  field_info->add_option("-t,--time", t, "time instant, s");
  auto* run = app.add_subcommand("run", "simulate, filter, sysmat, lsqr, fbp and compare");
  auto* config = app.add_subcommand("config", "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }
  spdlog::set_level(common.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    const auto cfg = resolve_config(common);
    if (*simulate) stage_simulate(cfg);
    if (*filter) stage_filter(cfg, common.force);
    if (*sysmat) stage_sysmat(cfg);
    if (*lsqr) stage_lsqr(cfg, common.force);
    if (*fbp) stage_fbp(cfg, common.force);
    if (*compare) return stage_compare(cfg, image, reference);
    if (*sweep) stage_sweep(cfg, param, values);
    if (*phantom) stage_phantom(cfg);
    if (*field_info) stage_field_info(cfg, t);
    if (*run) run_all(cfg, common.force);
    if (*config) {
      fmt::print("# config_hash = {}\n{}", hash_hex(config_hash(cfg)), to_ini(cfg));
    } else {
      record_config(cfg);
    }
    return ok;
  } catch (const ParseError& e) {
    spdlog::error("config: {}", e.what());
    return config_error;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return config_error;
  } catch (const UnsupportedError& e) {
    spdlog::error("config: {}", e.what());
    return config_error;
  } catch (const MissingInputError& e) {
    spdlog::error("missing input: {}", e.what());
    return missing_input;
  } catch (const HashMismatchError& e) {
    spdlog::error("hash mismatch: {}", e.what());
    return hash_mismatch;
  } catch (const ResourceCapError& e) {
    spdlog::error("resource cap: {}", e.what());
    return resource_cap;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return failure;
  }
}
