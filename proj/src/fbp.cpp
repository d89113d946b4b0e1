#include "shmpi/fbp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>
#include <fmt/os.h>
#include <spdlog/spdlog.h>
#include <unsupported/Eigen/FFT>

#include "shmpi/errors.hpp"
#include "shmpi/phantom.hpp"

namespace shmpi {

namespace {

constexpr double pi = std::numbers::pi;

std::size_t fft_length(std::size_t n) {
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  return len;
}

// Bilinear interpolation between cell centers of the z = 0 slice; zero beyond
// the outermost centers' neighbours.
double sample_bilinear(const ConcentrationGrid& c, double x, double y) {
  const auto& s = c.spec;
  const double fx = (x - s.origin.x()) / s.spacing.x();
  const double fy = (y - s.origin.y()) / s.spacing.y();
  const double ix = std::floor(fx), iy = std::floor(fy);
  const double ax = fx - ix, ay = fy - iy;
  const int i0 = static_cast<int>(ix), j0 = static_cast<int>(iy);
  auto at = [&](int i, int j) {
    return (i < 0 || j < 0 || i >= s.dims[0] || j >= s.dims[1]) ? 0.0 : c(i, j);
  };
  return (1 - ax) * (1 - ay) * at(i0, j0) + ax * (1 - ay) * at(i0 + 1, j0) + (1 - ax) * ay * at(i0, j0 + 1) +
         ax * ay * at(i0 + 1, j0 + 1);
}

double interp_linear(const Eigen::VectorXd& q, double idx) {
  if (idx < 0.0 || idx > static_cast<double>(q.size() - 1)) return 0.0;
  const auto i = static_cast<Eigen::Index>(std::floor(idx));
  if (i >= q.size() - 1) return q[q.size() - 1];
  const double a = idx - static_cast<double>(i);
  return (1 - a) * q[i] + a * q[i + 1];
}

// Linear interpolation over empty bins; constant extension at the ends.
void fill_gaps(Eigen::VectorXd& row, const std::vector<int>& counts) {
  const auto n = row.size();
  std::vector<Eigen::Index> filled;
  for (Eigen::Index j = 0; j < n; ++j)
    if (counts[j] > 0) filled.push_back(j);
  if (filled.empty()) {
    row.setZero();
    return;
  }
  for (Eigen::Index j = 0; j < filled.front(); ++j) row[j] = row[filled.front()];
  for (Eigen::Index j = filled.back() + 1; j < n; ++j) row[j] = row[filled.back()];
  for (std::size_t k = 0; k + 1 < filled.size(); ++k) {
    const auto a = filled[k], b = filled[k + 1];
    for (auto j = a + 1; j < b; ++j) {
      const double w = static_cast<double>(j - a) / static_cast<double>(b - a);
      row[j] = (1 - w) * row[a] + w * row[b];
    }
  }
}

}  // namespace

double Sinogram::spacing() const {
  return displacements.size() > 1 ? displacements[1] - displacements[0] : 0.0;
}

void Sinogram::validate() const {
  if (values.rows() != static_cast<Eigen::Index>(angles.size()) ||
      values.cols() != static_cast<Eigen::Index>(displacements.size())) {
    throw ConfigError("sinogram shape does not match its axes");
  }
  if (displacements.size() < 2) throw ConfigError("sinogram needs at least two displacements");
  const double ds = spacing();
  if (!(ds > 0.0)) throw ConfigError("sinogram displacements must increase");
  for (std::size_t j = 1; j < displacements.size(); ++j) {
    if (std::abs(displacements[j] - displacements[j - 1] - ds) > 1e-9 * ds) {
      throw ConfigError("sinogram displacements are not uniform");
    }
  }
}

std::vector<double> uniform_angles(int n) {
  if (n < 1) throw ConfigError("need at least one angle");
  std::vector<double> a(n);
  for (int k = 0; k < n; ++k) a[k] = pi * k / n;
  return a;
}

std::vector<double> uniform_displacements(int n, double half_width) {
  if (n < 2 || !(half_width > 0.0)) throw ConfigError("need at least two displacement bins and a positive width");
  std::vector<double> s(n);
  const double ds = 2.0 * half_width / n;
  for (int j = 0; j < n; ++j) s[j] = -half_width + (j + 0.5) * ds;
  return s;
}

Sinogram radon_transform(const ConcentrationGrid& c, const std::vector<double>& angles,
                         const std::vector<double>& displacements) {
  const auto& g = c.spec;
  if (!g.planar()) throw UnsupportedError("the Radon transform needs a planar grid");
  Sinogram out;
  out.angles = angles;
  out.displacements = displacements;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(angles.size()),
                                     static_cast<Eigen::Index>(displacements.size()));
  const double h = 0.5 * std::min(g.spacing.x(), g.spacing.y());
  const double cx = g.origin.x() + 0.5 * (g.dims[0] - 1) * g.spacing.x();
  const double cy = g.origin.y() + 0.5 * (g.dims[1] - 1) * g.spacing.y();
  const double reach = 0.5 * std::hypot(g.dims[0] * g.spacing.x(), g.dims[1] * g.spacing.y()) +
                       std::max(g.spacing.x(), g.spacing.y());
  const auto steps = static_cast<int>(std::ceil(2.0 * reach / h));
  const auto n_angles = static_cast<std::ptrdiff_t>(angles.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n_angles; ++i) {
    const double ca = std::cos(angles[i]), sa = std::sin(angles[i]);
    const double tc = -sa * cx + ca * cy;  // center position along the line
    for (std::size_t j = 0; j < displacements.size(); ++j) {
      const double s = displacements[j];
      double acc = 0.0;
      for (int k = 0; k < steps; ++k) {
        const double tau = tc - reach + (k + 0.5) * h;
        acc += sample_bilinear(c, s * ca - tau * sa, s * sa + tau * ca);
      }
      out.values(i, static_cast<Eigen::Index>(j)) = acc * h;
    }
  }
  return out;
}

Sinogram signal_to_sinogram(const std::vector<SignalTrace>& traces, const std::vector<ReceiveCoil>& coils,
                            const SinogramOptions& opt) {
  if (traces.empty() || traces.size() != coils.size()) throw ConfigError("one receive coil per trace required");
  if (!(opt.gradient > 0.0) || !(opt.drive_amplitude > 0.0) || !(opt.f_d > 0.0) || !(opt.f_rot >= 0.0)) {
    throw ConfigError("sinogram conversion needs positive g, d and f_d");
  }
  if (opt.decimation < 1 || opt.bins < 2) throw ConfigError("invalid sinogram binning or decimation");
  const auto& ref = traces.front();
  for (const auto& t : traces) {
    if (t.size() != ref.size() || t.sample_rate != ref.sample_rate || t.t0 != ref.t0) {
      throw ConfigError("coil traces must share their sampling");
    }
  }
  opt.mag.validate();
  const double half_period = 0.5 / opt.f_d;
  const double duration = static_cast<double>(ref.size()) / ref.sample_rate;
  const auto n_proj = static_cast<int>(std::floor(duration / half_period + 1e-6));
  if (n_proj < 1) throw ConfigError("trace is shorter than half a drive period");
  const double half_width = opt.drive_amplitude / (2.0 * opt.gradient);
  const double ds = 2.0 * half_width / opt.bins;
  const double w = 2.0 * pi * opt.f_d;
  const double norm = opt.slice_thickness * opt.mag.m0 / opt.gradient;

  Sinogram out;
  out.f_d = opt.f_d;
  out.f_rot = opt.f_rot;
  out.gradient = opt.gradient;
  out.drive_amplitude = opt.drive_amplitude;
  out.displacements = uniform_displacements(opt.bins, half_width);
  out.values = Eigen::MatrixXd::Zero(n_proj, opt.bins);
  out.angles.resize(n_proj);
  std::vector<std::vector<int>> counts(n_proj, std::vector<int>(opt.bins, 0));

  for (std::size_t i = 0; i < ref.size(); i += static_cast<std::size_t>(opt.decimation)) {
    const double t = ref.time(i);
    const auto p = static_cast<int>(std::floor((t - ref.t0) / half_period + 1e-9));
    if (p < 0 || p >= n_proj) continue;
    const double c = std::cos(w * t);
    if (std::abs(c) < opt.cos_guard) continue;
    const double a = pi * opt.f_rot * t;
    const Vec3 e(std::sin(a), -std::cos(a), 0.0);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const double pk = coils[k].sensitivity.dot(e);
      num += pk * traces[k].samples[i];
      den += pk * pk;
    }
    if (den < opt.cos_guard * opt.cos_guard) continue;
    const double velocity = -2.0 * pi * opt.drive_amplitude * kMu0 * opt.f_d * c;
    const double value = num / (den * velocity * norm);
    const double s = half_width * std::sin(w * t);
    const int bin = std::clamp(static_cast<int>(std::floor((s + half_width) / ds)), 0, opt.bins - 1);
    out.values(p, bin) += value;
    ++counts[p][bin];
  }

  double lo = 1e300, hi = -1e300;
  for (int p = 0; p < n_proj; ++p) {
    for (int j = 0; j < opt.bins; ++j)
      if (counts[p][j] > 0) out.values(p, j) /= counts[p][j];
    Eigen::VectorXd row = out.values.row(p).transpose();
    fill_gaps(row, counts[p]);
    out.values.row(p) = row.transpose();
    // e_alpha = (sin a, -cos a) is the normal (cos theta, sin theta) for theta = a - pi/2.
    double theta = pi * opt.f_rot * (ref.t0 + (p + 0.5) * half_period) - 0.5 * pi;
    const double turns = std::floor(theta / pi);
    theta -= turns * pi;
    if (static_cast<long>(turns) % 2 != 0) out.values.row(p) = out.values.row(p).reverse().eval();
    out.angles[p] = theta;
    lo = std::min(lo, theta);
    hi = std::max(hi, theta);
  }
  if (n_proj < 2 || hi - lo < 150.0 * pi / 180.0) {
    spdlog::warn("sinogram spans only {:.0f} degrees of projection angles", (hi - lo) * 180.0 / pi);
  }
  return opt.deconvolve ? deconvolve_sinogram(out, opt.mag, opt.nsr) : out;
}

Sinogram deconvolve_sinogram(const Sinogram& s, const LangevinParams& mag, double nsr) {
  s.validate();
  if (!(nsr > 0.0)) throw ConfigError("Wiener noise-to-signal ratio must be positive");
  if (!(s.gradient > 0.0)) throw ConfigError("sinogram carries no gradient strength");
  const auto n = static_cast<std::size_t>(s.values.cols());
  const std::size_t len = fft_length(n);
  const double ds = s.spacing();
  std::vector<double> kernel(len, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    const double off = (j <= len / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(len)) * ds;
    kernel[j] = mbar_prime(mag, std::abs(2.0 * s.gradient * off)) * ds * s.gradient / mag.m0;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> K;
  fft.fwd(K, kernel);
  Sinogram out = s;
  for (Eigen::Index p = 0; p < s.values.rows(); ++p) {
    std::vector<double> row(len, 0.0);
    for (std::size_t j = 0; j < n; ++j) row[j] = s.values(p, static_cast<Eigen::Index>(j));
    std::vector<std::complex<double>> Y;
    fft.fwd(Y, row);
    for (std::size_t k = 0; k < len; ++k) Y[k] *= std::conj(K[k]) / (std::norm(K[k]) + nsr);
    std::vector<double> x;
    fft.inv(x, Y);
    for (std::size_t j = 0; j < n; ++j) out.values(p, static_cast<Eigen::Index>(j)) = x[j];
  }
  return out;
}

Sinogram zero_pad(const Sinogram& s, double new_half_width) {
  s.validate();
  const double ds = s.spacing();
  const double half = 0.5 * (s.displacements.back() - s.displacements.front() + ds);
  if (new_half_width < half * (1.0 - 1e-12)) throw std::domain_error("zero padding cannot shrink a sinogram");
  const auto extra = static_cast<Eigen::Index>(std::llround(std::max(0.0, new_half_width - half) / ds));
  if (extra == 0) return s;
  Sinogram out = s;
  const Eigen::Index n = s.values.cols();
  out.values = Eigen::MatrixXd::Zero(s.values.rows(), n + 2 * extra);
  out.values.middleCols(extra, n) = s.values;
  out.displacements.clear();
  for (Eigen::Index j = -extra; j < n + extra; ++j) out.displacements.push_back(s.displacements.front() + j * ds);
  return out;
}

ConcentrationGrid fbp_reconstruct(const Sinogram& s, const GridSpec& grid, const FbpOptions& opt) {
  s.validate();
  if (s.angles.size() < 2) throw ConfigError("filtered back projection needs at least two angles");
  if (!grid.planar()) throw UnsupportedError("filtered back projection reconstructs a planar grid");
  const auto n = static_cast<std::size_t>(s.values.cols());
  const std::size_t len = fft_length(n);
  const double ds = s.spacing();

  // Ram-Lak in the spatial domain avoids the DC bias of a sampled |omega|.
  std::vector<double> h(len, 0.0);
  h[0] = 1.0 / (4.0 * ds * ds);
  for (std::size_t k = 1; k <= len / 2; ++k) {
    if (k % 2 == 1) {
      const double v = -1.0 / (pi * pi * static_cast<double>(k * k) * ds * ds);
      h[k] = v;
      h[len - k] = v;
    }
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> H;
  fft.fwd(H, h);
  if (opt.hann) {
    for (std::size_t k = 0; k < len; ++k) {
      const double f = static_cast<double>(k <= len / 2 ? k : len - k) / static_cast<double>(len / 2);
      H[k] *= 0.5 * (1.0 + std::cos(pi * f));
    }
  }

  const auto n_angles = static_cast<Eigen::Index>(s.angles.size());
  std::vector<Eigen::VectorXd> filtered(n_angles);
  for (Eigen::Index p = 0; p < n_angles; ++p) {
    std::vector<double> row(len, 0.0);
    for (std::size_t j = 0; j < n; ++j) row[j] = s.values(p, static_cast<Eigen::Index>(j));
    std::vector<std::complex<double>> P;
    fft.fwd(P, row);
    for (std::size_t k = 0; k < len; ++k) P[k] *= H[k];
    std::vector<double> q;
    fft.inv(q, P);
    filtered[p].resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) filtered[p][static_cast<Eigen::Index>(j)] = q[j] * ds;
  }

  ConcentrationGrid out(grid);
  const double s0 = s.displacements.front();
  const double scale = pi / static_cast<double>(n_angles);
  const auto cells = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < cells; ++k) {
    const Vec3 r = grid.center(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (Eigen::Index p = 0; p < n_angles; ++p) {
      const double sp = r.x() * std::cos(s.angles[p]) + r.y() * std::sin(s.angles[p]);
      acc += interp_linear(filtered[p], (sp - s0) / ds);
    }
    out.values[k] = acc * scale;
  }
  return out;
}

void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& s) {
  auto out = fmt::output_file(path.string());
  out.print("angle");
  for (double d : s.displacements) out.print(",{:.17g}", d);
  out.print("\n");
  for (Eigen::Index p = 0; p < s.values.rows(); ++p) {
    out.print("{:.17g}", s.angles[p]);
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) out.print(",{:.17g}", s.values(p, j));
    out.print("\n");
  }
}

void write_sinogram_pgm(const std::filesystem::path& path, const Sinogram& s) { write_pgm(path, s.values); }

}  // namespace shmpi
