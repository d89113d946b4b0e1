#include "shmpi/forward.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>
#include <unsupported/Eigen/FFT>

#include "shmpi/errors.hpp"

namespace shmpi {

void ReceiveCoil::validate() const {
  if (!sensitivity_field && !(sensitivity.norm() > 0.0)) throw ConfigError("receive coil sensitivity must be nonzero");
}

std::size_t AcquisitionConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::vector<double> AcquisitionConfig::times() const {
  std::vector<double> t(sample_count());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = t0 + static_cast<double>(i) / sample_rate;
  return t;
}

void AcquisitionConfig::validate() const {
  if (!(f_d > 0.0)) throw ConfigError("drive frequency must be positive");
  if (!(f_rot >= 0.0)) throw ConfigError("rotation frequency must be nonnegative");
  if (!(sample_rate > 2.0 * f_d)) throw ConfigError("sample rate must exceed twice the drive frequency");
  if (!(duration > 0.0) || sample_count() < 2) throw ConfigError("acquisition needs at least two samples");
  if (f_rot > 0.0) {
    const double periods = duration * f_rot;
    if (std::abs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods) || std::round(periods) < 1.0) {
      throw ConfigError(fmt::format("duration {} s is not a whole number of rotation periods 1/f_rot", duration));
    }
  }
  if (!(highpass_cutoff >= 0.0)) throw ConfigError("high-pass cutoff must be nonnegative");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
}

Quadrature build_quadrature(const GridSpec& spec, int s, const Eigen::VectorXd* support) {
  if (s < 1) throw ConfigError("subsampling must be at least 1");
  const int sz = spec.planar() ? 1 : s;
  const double w = spec.cell_volume() / (static_cast<double>(s) * s * sz);
  Quadrature q;
  const std::size_t per_cell = static_cast<std::size_t>(s) * s * sz;
  if (support && static_cast<std::size_t>(support->size()) != spec.size()) {
    throw std::invalid_argument("quadrature support does not match the grid");
  }
  q.points.reserve(spec.size() * per_cell);
  q.cell.reserve(spec.size() * per_cell);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (support && (*support)[static_cast<Eigen::Index>(k)] == 0.0) continue;
    const Vec3 c = spec.center(k);
    for (int iz = 0; iz < sz; ++iz)
      for (int iy = 0; iy < s; ++iy)
        for (int ix = 0; ix < s; ++ix) {
          const Vec3 off((ix + 0.5) / s - 0.5, (iy + 0.5) / s - 0.5, (iz + 0.5) / sz - 0.5);
          q.points.push_back(c + off.cwiseProduct(spec.spacing));
          q.cell.push_back(static_cast<std::uint32_t>(k));
        }
  }
  q.weights.assign(q.points.size(), w);
  return q;
}

namespace {

std::vector<Vec3> sensitivities(const ReceiveCoil& coil, const std::vector<Vec3>& pts) {
  coil.validate();
  std::vector<Vec3> rho;
  if (coil.sensitivity_field) {
    rho.reserve(pts.size());
    for (const auto& p : pts) rho.push_back(coil.at(p));
  }
  return rho;
}

// Quadrature restricted to points where the concentration is nonzero, with the
// concentration folded into the weight.
struct WeightedPoints {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

WeightedPoints occupied_points(const ConcentrationGrid& c, int subsampling) {
  const auto q = build_quadrature(c.spec, subsampling);
  WeightedPoints wp;
  for (std::size_t i = 0; i < q.points.size(); ++i) {
    const double v = c.values[q.cell[i]];
    if (v != 0.0) {
      wp.points.push_back(q.points[i]);
      wp.weights.push_back(q.weights[i] * v);
    }
  }
  return wp;
}

SignalTrace empty_trace(const AcquisitionConfig& acq) {
  acq.validate();
  SignalTrace tr;
  tr.sample_rate = acq.sample_rate;
  tr.t0 = acq.t0;
  tr.samples.assign(acq.sample_count(), 0.0);
  return tr;
}

}  // namespace

PiecewiseRowAssembler::PiecewiseRowAssembler(const FieldModel& model, const ReceiveCoil& coil,
                                             const MagnetizationApprox& approx, const GridSpec& grid,
                                             int subsampling, const Eigen::VectorXd* support)
    : model_(model),
      approx_(approx),
      quad_(build_quadrature(grid, subsampling, support)),
      basis_(model, quad_.points),
      rho_(sensitivities(coil, quad_.points)),
      cols_(grid.size()) {
  if (rho_.empty()) rho_.assign(1, coil.sensitivity);
}

void PiecewiseRowAssembler::row(double t, std::vector<std::pair<std::uint32_t, double>>& out) const {
  const auto state = model_.modulation_state(t);
  const bool uniform_rho = rho_.size() == 1;
  const std::size_t n = quad_.points.size();
  std::size_t i = 0;
  while (i < n) {
    const std::uint32_t cell = quad_.cell[i];
    double acc = 0.0;
    bool touched = false;
    for (; i < n && quad_.cell[i] == cell; ++i) {
      const int interval = approx_.interval(basis_.field(i, state).norm());
      if (interval < 0) continue;
      const Vec3& rho = uniform_rho ? rho_[0] : rho_[i];
      const double kernel = -kMu0 * rho.dot(basis_.field_dt(i, state));
      acc += approx_.slopes[interval] * kernel * quad_.weights[i];
      touched = true;
    }
    if (touched && acc != 0.0) out.emplace_back(cell, acc);
  }
}

SignalTrace simulate_general(const FieldModel& model, const LangevinParams& mag, const ConcentrationGrid& c,
                             const ReceiveCoil& coil, const AcquisitionConfig& acq, const ForwardOptions& opt) {
  mag.validate();
  if (opt.fd_substeps < 1) throw ConfigError("fd_substeps must be at least 1");
  auto tr = empty_trace(acq);
  const auto wp = occupied_points(c, opt.subsampling);
  if (wp.points.empty()) return tr;
  const PointBasis basis(model, wp.points);
  const auto rho = sensitivities(coil, wp.points);
  const double h = 1.0 / (acq.sample_rate * opt.fd_substeps);

  // Flux-like quantity sum_q w c <rho, mbar(|B|) B/|B|>.
  auto moment = [&](double t) {
    const auto state = model.modulation_state(t);
    double acc = 0.0;
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
      const Vec3 b = basis.field(i, state);
      const double bn = b.norm();
      if (bn == 0.0) continue;
      const Vec3& r = rho.empty() ? coil.sensitivity : rho[i];
      acc += wp.weights[i] * mbar(mag, bn) / bn * r.dot(b);
    }
    return acc;
  };
  const auto n = static_cast<std::ptrdiff_t>(tr.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const double t = tr.time(static_cast<std::size_t>(j));
    tr.samples[j] = -kMu0 * (moment(t + h) - moment(t - h)) / (2.0 * h);
  }
  return tr;
}

SignalTrace simulate_parallel(const FieldModel& model, const LangevinParams& mag, const ConcentrationGrid& c,
                              const ReceiveCoil& coil, const AcquisitionConfig& acq, const ForwardOptions& opt) {
  mag.validate();
  auto tr = empty_trace(acq);
  const auto wp = occupied_points(c, opt.subsampling);
  if (wp.points.empty()) return tr;
  const PointBasis basis(model, wp.points);
  const auto rho = sensitivities(coil, wp.points);
  const auto n = static_cast<std::ptrdiff_t>(tr.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto state = model.modulation_state(tr.time(static_cast<std::size_t>(j)));
    double acc = 0.0;
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
      const Vec3& r = rho.empty() ? coil.sensitivity : rho[i];
      acc += wp.weights[i] * r.dot(basis.field_dt(i, state)) * mbar_prime(mag, basis.field(i, state).norm());
    }
    tr.samples[j] = -kMu0 * acc;
  }
  return tr;
}

SignalTrace simulate_piecewise(const FieldModel& model, const MagnetizationApprox& approx,
                               const ConcentrationGrid& c, const ReceiveCoil& coil, const AcquisitionConfig& acq,
                               const ForwardOptions& opt) {
  auto tr = empty_trace(acq);
  const PiecewiseRowAssembler rows(model, coil, approx, c.spec, opt.subsampling, &c.values);
  const auto n = static_cast<std::ptrdiff_t>(tr.size());
#pragma omp parallel
  {
    std::vector<std::pair<std::uint32_t, double>> entries;
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      entries.clear();
      rows.row(tr.time(static_cast<std::size_t>(j)), entries);
      double acc = 0.0;
      for (const auto& [k, v] : entries) acc += v * c.values[k];
      tr.samples[j] = acc;
    }
  }
  return tr;
}

void highpass_inplace(double* data, std::size_t n, double sample_rate, double cutoff) {
  if (n < 2) throw std::invalid_argument("high-pass needs at least two samples");
  if (cutoff <= 0.0) return;
  Eigen::FFT<double> fft;
  std::vector<double> in(data, data + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = (k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * df;
    if (std::abs(f) < cutoff) spec[k] = 0.0;
  }
  std::vector<std::complex<double>> out;
  fft.inv(out, spec);
  for (std::size_t i = 0; i < n; ++i) data[i] = out[i].real();
}

SignalTrace apply_highpass(const SignalTrace& trace, double cutoff) {
  SignalTrace out = trace;
  highpass_inplace(out.samples.data(), out.size(), out.sample_rate, cutoff);
  return out;
}

SignalTrace add_noise(const SignalTrace& trace, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
  SignalTrace out = trace;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out.samples) v += normal(rng);
  return out;
}

double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

void write_trace_csv(const std::filesystem::path& path, const SignalTrace& trace) {
  auto out = fmt::output_file(path.string());
  out.print("t,volts\n");
  for (std::size_t i = 0; i < trace.size(); ++i) out.print("{:.17g},{:.17g}\n", trace.time(i), trace.samples[i]);
}

void write_trace_binary(const std::filesystem::path& path, const SignalTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trace " + path.string());
  out << fmt::format("{} {:.17g} {:.17g} {}\n", trace.size(), trace.sample_rate, trace.t0, trace.coil);
  out.write(reinterpret_cast<const char*>(trace.samples.data()),
            static_cast<std::streamsize>(trace.size() * sizeof(double)));
}

SignalTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open trace " + path.string());
  SignalTrace tr;
  std::string line;
  if (path.extension() == ".csv") {
    std::getline(in, line);
    std::vector<double> t;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("expected 't,volts'", lineno);
      try {
        t.push_back(std::stod(line.substr(0, comma)));
        tr.samples.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw ParseError("malformed number", lineno);
      }
    }
    if (t.size() < 2) throw ParseError("trace needs at least two samples", lineno);
    tr.t0 = t.front();
    tr.sample_rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    return tr;
  }
  std::getline(in, line);
  std::istringstream hs(line);
  std::size_t n = 0;
  if (!(hs >> n >> tr.sample_rate >> tr.t0 >> tr.coil)) throw ParseError("malformed trace header", 1);
  tr.samples.resize(n);
  in.read(reinterpret_cast<char*>(tr.samples.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) throw ParseError("trace is truncated", 2);
  return tr;
}

}  // namespace shmpi
