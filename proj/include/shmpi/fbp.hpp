#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "shmpi/forward.hpp"
#include "shmpi/grid.hpp"

namespace shmpi {

/// values(i, j) is the line integral over <r, (cos theta_i, sin theta_i)> = s_j.
struct Sinogram {
  Eigen::MatrixXd values;
  std::vector<double> angles;
  std::vector<double> displacements;
  double f_d = 0.0;
  double f_rot = 0.0;
  double gradient = 0.0;
  double drive_amplitude = 0.0;

  double spacing() const;
  /// Uniform displacements and one row per angle.
  void validate() const;
};

/// k pi / n, k = 0..n-1.
std::vector<double> uniform_angles(int n);
/// n bin centers covering [-half_width, half_width].
std::vector<double> uniform_displacements(int n, double half_width);

/// Line integrals by summation along each line with a step of half a cell,
/// bilinear interpolation between cell centers and zero outside the grid.
Sinogram radon_transform(const ConcentrationGrid& c, const std::vector<double>& angles,
                         const std::vector<double>& displacements);

struct SinogramOptions {
  double gradient = 0.5;
  double drive_amplitude = 0.05;
  double f_d = 25e3;
  double f_rot = 2e3;
  int bins = 64;
  /// Samples with |cos(2 pi f_d t)| below this are dropped.
  double cos_guard = 0.05;
  /// Keep every n-th sample.
  int decimation = 1;
  bool deconvolve = false;
  double nsr = 1e-2;
  LangevinParams mag;
  /// z extent of the imaged slice, m.
  double slice_thickness = 1e-3;
};

/// Divides each FFL voltage sample by -2 pi d mu0 f_d cos(2 pi f_d t) <rho, e>,
/// combines the coils by least squares, bins the result over
/// s = (d/2g) sin(2 pi f_d t) per half drive period and normalizes by the
/// kernel integral m0/g and the slice thickness. Projection angles are taken at
/// the middle of each half period; empty bins are filled by linear
/// interpolation.
Sinogram signal_to_sinogram(const std::vector<SignalTrace>& traces, const std::vector<ReceiveCoil>& coils,
                            const SinogramOptions& opt);

/// Wiener deconvolution of every projection with the normalized kernel m'(|2g s|).
Sinogram deconvolve_sinogram(const Sinogram& s, const LangevinParams& mag, double nsr);

/// Extends the displacement axis symmetrically with zeros.
Sinogram zero_pad(const Sinogram& s, double new_half_width);

struct FbpOptions {
  bool hann = false;
};

/// Ram-Lak filtered back projection scaled by pi / number of angles.
ConcentrationGrid fbp_reconstruct(const Sinogram& s, const GridSpec& out, const FbpOptions& opt = {});

/// One row per angle: `angle,s_0,...` with a header row of displacements.
void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& s);
void write_sinogram_pgm(const std::filesystem::path& path, const Sinogram& s);

}  // namespace shmpi
