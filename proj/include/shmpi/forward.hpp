#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "shmpi/field_model.hpp"
#include "shmpi/grid.hpp"
#include "shmpi/magnetization.hpp"

namespace shmpi {

inline constexpr double kMu0 = 4e-7 * std::numbers::pi;

struct ReceiveCoil {
  Vec3 sensitivity{1.0, 0.0, 0.0};
  /// Optional space-varying sensitivity; when set it replaces `sensitivity`.
  std::function<Vec3(const Vec3&)> sensitivity_field;

  Vec3 at(const Vec3& r) const { return sensitivity_field ? sensitivity_field(r) : sensitivity; }
  void validate() const;
};

struct SignalTrace {
  std::vector<double> samples;
  double sample_rate = 1.0;
  double t0 = 0.0;
  int coil = 0;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
};

struct AcquisitionConfig {
  double f_d = 25e3;
  double f_rot = 2e3;
  double sample_rate = 8e6;
  double duration = 5e-4;
  double t0 = -1.0 / (4.0 * 25e3);
  double highpass_cutoff = 1.4 * 25e3;
  double noise_sigma = 0.0;

  std::size_t sample_count() const;
  std::vector<double> times() const;
  /// sample_rate > 2 f_d, T >= 2 and, when f_rot > 0, a whole number of
  /// rotation periods 1/f_rot.
  void validate() const;
};

/// Midpoint quadrature: each cell is split into s x s (x s) sub-cells; planar
/// grids are not split along z. Points are ordered by cell index.
struct Quadrature {
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<std::uint32_t> cell;
};
/// With `support`, only cells k with support[k] != 0 are included.
Quadrature build_quadrature(const GridSpec& spec, int subsampling, const Eigen::VectorXd* support = nullptr);

struct ForwardOptions {
  int subsampling = 1;
  /// simulate_general: the central difference uses the step 1 / (sample_rate * fd_substeps).
  int fd_substeps = 1;
};

/// Row assembly shared by simulate_piecewise and the system matrix: entry k is
/// sum over the quadrature points of cell k of s_n K(r, t) w, where n is the
/// interval of |B(r, t)| and K = -mu0 <rho, dB/dt>. Cells outside `support`
/// are left out; their entries are never needed when they multiply zero.
class PiecewiseRowAssembler {
 public:
  PiecewiseRowAssembler(const FieldModel& model, const ReceiveCoil& coil, const MagnetizationApprox& approx,
                        const GridSpec& grid, int subsampling, const Eigen::VectorXd* support = nullptr);

  /// Appends (cell, value) pairs with nonzero value, cells ascending.
  void row(double t, std::vector<std::pair<std::uint32_t, double>>& out) const;
  std::size_t cols() const { return cols_; }

 private:
  const FieldModel& model_;
  const MagnetizationApprox& approx_;
  Quadrature quad_;
  PointBasis basis_;
  std::vector<Vec3> rho_;
  std::size_t cols_;
};

/// -mu0 d/dt sum_q w c <rho, mbar(|B|) B/|B|>, central differences in time.
SignalTrace simulate_general(const FieldModel& model, const LangevinParams& mag, const ConcentrationGrid& c,
                             const ReceiveCoil& coil, const AcquisitionConfig& acq, const ForwardOptions& opt = {});

/// -mu0 sum_q w c <rho, dB/dt> mbar'(|B|).
SignalTrace simulate_parallel(const FieldModel& model, const LangevinParams& mag, const ConcentrationGrid& c,
                              const ReceiveCoil& coil, const AcquisitionConfig& acq, const ForwardOptions& opt = {});

/// simulate_parallel with mbar' replaced by its piecewise constant approximation.
SignalTrace simulate_piecewise(const FieldModel& model, const MagnetizationApprox& approx,
                               const ConcentrationGrid& c, const ReceiveCoil& coil, const AcquisitionConfig& acq,
                               const ForwardOptions& opt = {});

/// Zeroes every DFT bin with |f| < cutoff (both signs) and keeps the real part.
void highpass_inplace(double* data, std::size_t n, double sample_rate, double cutoff);
SignalTrace apply_highpass(const SignalTrace& trace, double cutoff);
SignalTrace add_noise(const SignalTrace& trace, double sigma, std::uint64_t seed);
double rms(const std::vector<double>& v);

void write_trace_csv(const std::filesystem::path& path, const SignalTrace& trace);
/// Text header `T sample_rate t0 coil` then T raw doubles.
void write_trace_binary(const std::filesystem::path& path, const SignalTrace& trace);
/// Reads either format; CSV is recognised by the .csv extension.
SignalTrace read_trace(const std::filesystem::path& path);

}  // namespace shmpi
