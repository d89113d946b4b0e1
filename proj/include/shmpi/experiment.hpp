#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shmpi/fbp.hpp"
#include "shmpi/forward.hpp"
#include "shmpi/magnetization.hpp"
#include "shmpi/phantom.hpp"
#include "shmpi/recon.hpp"
#include "shmpi/sysmat.hpp"

namespace shmpi {

enum class SignalModel { general, parallel };
const char* to_string(SignalModel m);
SignalModel signal_model_from_string(const std::string& name);

/// All experiment parameters in SI units. The INI form uses mT and mm where
/// the key name says so.
struct ExperimentConfig {
  // [field]
  std::string topology = "rotating_ffl";
  std::string coefficient_file;  // replaces the topology when set
  double gradient = 0.5;
  double drive_amplitude = 0.05;
  double static_angle = 0.0;
  double perturbation = 0.0;
  std::uint64_t perturbation_seed = 7;
  double validity_radius = 0.05;

  // [acquisition]
  double f_d = 25e3;
  double f_rot = 2e3;
  double sample_rate = 8e6;
  double duration = 5e-4;
  double noise_level = 1e-3;  // times the RMS of the clean trace
  std::uint64_t noise_seed = 42;
  double highpass_factor = 1.4;  // cutoff in units of f_d
  SignalModel simulator = SignalModel::parallel;
  int fd_substeps = 8;  // general model only

  // [magnetization]
  double m0 = 1.0;
  double lambda = 4000.0;
  double threshold = 0.01;
  int nodes = 30;
  Scheme scheme = Scheme::secant;
  NodeStrategy node_strategy = NodeStrategy::equidistant;

  // [phantom]
  double fov = 0.1;
  std::vector<double> discs{0.004, 0.006, 0.008, 0.01};

  // [grid]
  int signal_pixels = 100;
  int recon_pixels = 64;
  double slice = 1e-3;
  int signal_subsampling = 3;
  int sysmat_subsampling = 4;
  std::size_t nnz_cap = 150'000'000;

  // [solver]
  int iterations = 20;

  // [fbp]
  int fbp_bins = 64;
  int fbp_decimation = 1;
  double fbp_cos_guard = 0.05;
  bool fbp_deconvolve = false;
  double fbp_nsr = 1e-2;
  double fbp_pad = 0.0;  // padded half width, 0 for none
  bool fbp_hann = false;

  // [output]
  std::string output_dir = "out";

  void validate() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key, including defaults, with 17 significant digits.
std::string to_ini(const ExperimentConfig& cfg);
/// FNV-1a of to_ini() with the output directory left out.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

FieldModel make_field(const ExperimentConfig& cfg);
/// The unperturbed topology with the same parameters.
FieldModel make_ideal_field(const ExperimentConfig& cfg);
LangevinParams make_langevin(const ExperimentConfig& cfg);
MagnetizationApprox make_approx(const ExperimentConfig& cfg);
AcquisitionConfig make_acquisition(const ExperimentConfig& cfg);
std::vector<ReceiveCoil> make_coils();
GridSpec signal_grid(const ExperimentConfig& cfg);
GridSpec recon_grid(const ExperimentConfig& cfg);
std::vector<Disc> phantom_discs(const ExperimentConfig& cfg);
ConcentrationGrid make_phantom(const ExperimentConfig& cfg);
/// Disc area fraction of every recon cell, from 16 x 16 points per cell.
ConcentrationGrid reference_image(const ExperimentConfig& cfg);

/// Raw coil voltages of the configured model, one trace per coil.
std::vector<SignalTrace> simulate_traces(const ExperimentConfig& cfg, const FieldModel& field,
                                         const ConcentrationGrid& phantom);
/// Adds noise relative to each raw trace's RMS, then removes |f| < highpass_factor f_d.
std::vector<SignalTrace> filter_traces(const ExperimentConfig& cfg, const std::vector<SignalTrace>& raw);

/// Both coils stacked, on the recon grid.
SystemMatrix build_experiment_matrix(const ExperimentConfig& cfg, const FieldModel& field,
                                     const MagnetizationApprox& approx);

struct AlgebraicResult {
  ConcentrationGrid image;
  LsqrResult lsqr;
};
/// LSQR on the high-passed system against the filtered traces.
AlgebraicResult reconstruct_algebraic(const ExperimentConfig& cfg, const SystemMatrix& s,
                                      const std::vector<SignalTrace>& filtered);

struct FbpResult {
  ConcentrationGrid image;
  Sinogram sinogram;
};
FbpResult reconstruct_fbp(const ExperimentConfig& cfg, const std::vector<SignalTrace>& filtered);

struct ScenarioResult {
  ConcentrationGrid reference;
  AlgebraicResult algebraic;
  FbpResult fbp;
  double nrmse_algebraic = 0.0;
  double nrmse_fbp = 0.0;
  double density = 0.0;
};
/// simulate, filter, sysmat, lsqr, fbp and compare in memory.
ScenarioResult run_scenario(const ExperimentConfig& cfg);

enum class SweepParameter { threshold, nodes, scheme };
SweepParameter sweep_parameter_from_string(const std::string& name);
const char* to_string(SweepParameter p);

struct SweepPoint {
  std::string label;
  double nrmse = 0.0;
  ConcentrationGrid image;
  std::vector<double> residuals;
};
/// Values are thresholds in T, node counts, or scheme labels
/// "secant-equidistant", "tangent-equidistant", "tangent-l1" (also with secant-l1).
/// The traces are simulated once and shared by every point.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, SweepParameter param,
                                  const std::vector<std::string>& values);

/// Centre of the smallest disc; the line profiles pass through it.
Vec3 profile_center(const ExperimentConfig& cfg);

/// Writes `<stem>.grid`, `<stem>.pgm` and the line profiles `<stem>_profile_{h,v}.csv`.
void write_image_outputs(const std::filesystem::path& dir, const std::string& stem, const ConcentrationGrid& image,
                         const ConcentrationGrid& reference, const Vec3& center);

}  // namespace shmpi
