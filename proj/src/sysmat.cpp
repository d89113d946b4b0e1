#include "shmpi/sysmat.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"
#include "shmpi/topology.hpp"

namespace shmpi {

double kernel(const FieldModel& model, const ReceiveCoil& coil, const Vec3& r, double t) {
  return -kMu0 * coil.at(r).dot(model.field_dt(r, t));
}

double SystemMatrix::density() const {
  const double dense = static_cast<double>(rows) * static_cast<double>(cols);
  return dense > 0.0 ? static_cast<double>(nnz()) / dense : 0.0;
}

void SystemMatrix::finalize() {
  col_ptr.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (auto k : col_idx) ++col_ptr[k + 1];
  for (Eigen::Index k = 0; k < cols; ++k) col_ptr[k + 1] += col_ptr[k];
  row_idx.resize(nnz());
  t_values.resize(nnz());
  std::vector<std::size_t> next(col_ptr.begin(), col_ptr.end() - 1);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) {
      const std::size_t q = next[col_idx[p]]++;
      row_idx[q] = static_cast<std::uint32_t>(j);
      t_values[q] = values[p];
    }
  }
}

Eigen::VectorXd SystemMatrix::multiply(const Eigen::VectorXd& c) const {
  if (c.size() != cols) throw std::invalid_argument("system matrix and concentration sizes differ");
  Eigen::VectorXd u(rows);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < rows; ++j) {
    double acc = 0.0;
    for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) acc += values[p] * c[col_idx[p]];
    u[j] = acc;
  }
  return u;
}

Eigen::VectorXd SystemMatrix::multiply_transpose(const Eigen::VectorXd& u) const {
  if (u.size() != rows) throw std::invalid_argument("system matrix and data sizes differ");
  if (col_ptr.size() != static_cast<std::size_t>(cols) + 1) throw std::logic_error("system matrix not finalized");
  Eigen::VectorXd c(cols);
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < cols; ++k) {
    double acc = 0.0;
    for (std::size_t p = col_ptr[k]; p < col_ptr[k + 1]; ++p) acc += t_values[p] * u[row_idx[p]];
    c[k] = acc;
  }
  return c;
}

Eigen::MatrixXd SystemMatrix::dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) d(j, col_idx[p]) = values[p];
  return d;
}

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

double uniform_step(const std::vector<double>& times) {
  if (times.empty()) throw ConfigError("system matrix needs at least one sample time");
  if (times.size() == 1) return 0.0;
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * dt) throw ConfigError("sample times are not uniform");
  }
  return dt;
}

}  // namespace

std::uint64_t system_hash(const FieldModel& model, const MagnetizationApprox& approx, const ReceiveCoil& coil,
                          const std::vector<double>& times, const GridSpec& grid, int subsampling) {
  Fnv1a h;
  h.text(format_field_coefficients(model));
  h.text(to_string(approx.scheme));
  h.bytes(approx.nodes.data(), approx.nodes.size() * sizeof(double));
  h.bytes(approx.slopes.data(), approx.slopes.size() * sizeof(double));
  h.value(coil.sensitivity.x());
  h.value(coil.sensitivity.y());
  h.value(coil.sensitivity.z());
  h.value(static_cast<std::uint8_t>(coil.sensitivity_field ? 1 : 0));
  h.bytes(times.data(), times.size() * sizeof(double));
  for (int d : grid.dims) h.value(d);
  for (int a = 0; a < 3; ++a) {
    h.value(grid.spacing[a]);
    h.value(grid.origin[a]);
  }
  h.value(subsampling);
  return h.digest();
}

std::uint64_t combine_hashes(const std::vector<std::uint64_t>& hashes) {
  Fnv1a h;
  for (auto v : hashes) h.value(v);
  return h.digest();
}

SystemMatrix build_system_matrix(const FieldModel& model, const MagnetizationApprox& approx,
                                 const ReceiveCoil& coil, const std::vector<double>& times, const GridSpec& grid,
                                 const SysmatOptions& opt) {
  const double dt = uniform_step(times);
  if (!(approx.threshold() > 0.0)) throw ConfigError("approximation threshold must be positive");
  const PiecewiseRowAssembler assembler(model, coil, approx, grid, opt.subsampling);
  const auto n_rows = static_cast<std::ptrdiff_t>(times.size());

  // Sparsity estimate from a sample of rows before committing memory.
  const std::ptrdiff_t stride = std::max<std::ptrdiff_t>(1, n_rows / 64);
  std::size_t sampled = 0, sampled_rows = 0;
  std::vector<std::pair<std::uint32_t, double>> scratch;
  for (std::ptrdiff_t j = 0; j < n_rows; j += stride) {
    scratch.clear();
    assembler.row(times[j], scratch);
    sampled += scratch.size();
    ++sampled_rows;
  }
  const double estimate = static_cast<double>(sampled) / static_cast<double>(sampled_rows) * static_cast<double>(n_rows);
  if (estimate > static_cast<double>(opt.nnz_cap)) {
    throw ResourceCapError(fmt::format("estimated system matrix nnz {:.3g} exceeds the cap {} ({} rows x {} cols)",
                                       estimate, opt.nnz_cap, n_rows, grid.size()));
  }

  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(times.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t j = 0; j < n_rows; ++j) assembler.row(times[j], rows[j]);

  SystemMatrix s;
  s.rows = n_rows;
  s.cols = static_cast<Eigen::Index>(grid.size());
  s.grid = grid;
  s.block_rows = {s.rows};
  s.sample_rate = dt > 0.0 ? 1.0 / dt : 0.0;
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  if (total > opt.nnz_cap) throw ResourceCapError(fmt::format("system matrix nnz {} exceeds the cap {}", total, opt.nnz_cap));
  s.row_ptr.reserve(rows.size() + 1);
  s.col_idx.reserve(total);
  s.values.reserve(total);
  for (auto& r : rows) {
    for (const auto& [k, v] : r) {
      s.col_idx.push_back(k);
      s.values.push_back(v);
    }
    s.row_ptr.push_back(s.values.size());
    std::vector<std::pair<std::uint32_t, double>>().swap(r);
  }
  if (total == 0) spdlog::warn("system matrix is empty: no cell falls below the threshold at any sample time");
  s.hash = system_hash(model, approx, coil, times, grid, opt.subsampling);
  s.finalize();
  spdlog::debug("system matrix {} x {}, nnz {} ({:.1f} %)", s.rows, s.cols, s.nnz(), 100.0 * s.density());
  return s;
}

StackedSystem stack_coils(const std::vector<SystemMatrix>& matrices, const std::vector<SignalTrace>& traces) {
  if (matrices.empty()) throw ConfigError("no system matrices to stack");
  if (!traces.empty() && traces.size() != matrices.size()) throw ConfigError("one trace per coil matrix required");
  StackedSystem out;
  auto& s = out.matrix;
  s.cols = matrices.front().cols;
  s.grid = matrices.front().grid;
  s.sample_rate = matrices.front().sample_rate;
  s.block_rows.clear();
  std::vector<std::uint64_t> hashes;
  Eigen::Index data_len = 0;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const auto& m = matrices[i];
    if (m.cols != s.cols || !(m.grid == s.grid)) throw ConfigError("coil system matrices use different grids");
    if (m.sample_rate != s.sample_rate) throw ConfigError("coil system matrices use different sample rates");
    if (!traces.empty() && static_cast<Eigen::Index>(traces[i].size()) != m.rows) {
      throw ConfigError(fmt::format("trace {} has {} samples but the matrix has {} rows", i, traces[i].size(), m.rows));
    }
    const std::size_t base = s.values.size();
    s.col_idx.insert(s.col_idx.end(), m.col_idx.begin(), m.col_idx.end());
    s.values.insert(s.values.end(), m.values.begin(), m.values.end());
    for (Eigen::Index j = 0; j < m.rows; ++j) s.row_ptr.push_back(base + m.row_ptr[j + 1]);
    s.rows += m.rows;
    s.block_rows.insert(s.block_rows.end(), m.block_rows.begin(), m.block_rows.end());
    hashes.push_back(m.hash);
    data_len += m.rows;
  }
  s.hash = matrices.size() == 1 ? matrices.front().hash : combine_hashes(hashes);
  s.finalize();
  if (!traces.empty()) {
    out.data.resize(data_len);
    Eigen::Index off = 0;
    for (const auto& t : traces) {
      out.data.segment(off, static_cast<Eigen::Index>(t.size())) =
          Eigen::Map<const Eigen::VectorXd>(t.samples.data(), static_cast<Eigen::Index>(t.size()));
      off += static_cast<Eigen::Index>(t.size());
    }
  }
  return out;
}

SystemMatrix apply_highpass_rows(const SystemMatrix& s, double cutoff) {
  if (cutoff <= 0.0) return s;
  if (!(s.sample_rate > 0.0)) throw UnsupportedError("high-pass needs uniformly sampled rows");
  Eigen::MatrixXd d = s.dense();
  Eigen::Index off = 0;
  for (Eigen::Index len : s.block_rows) {
    for (Eigen::Index k = 0; k < s.cols; ++k) {
      highpass_inplace(d.col(k).data() + off, static_cast<std::size_t>(len), s.sample_rate, cutoff);
    }
    off += len;
  }
  SystemMatrix out;
  out.rows = s.rows;
  out.cols = s.cols;
  out.grid = s.grid;
  out.block_rows = s.block_rows;
  out.sample_rate = s.sample_rate;
  out.hash = s.hash;
  for (Eigen::Index j = 0; j < d.rows(); ++j) {
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      if (d(j, k) != 0.0) {
        out.col_idx.push_back(static_cast<std::uint32_t>(k));
        out.values.push_back(d(j, k));
      }
    }
    out.row_ptr.push_back(out.values.size());
  }
  out.finalize();
  return out;
}

HighpassOperator::HighpassOperator(const SystemMatrix& s, double cutoff) : s_(s), cutoff_(cutoff) {
  if (cutoff > 0.0 && !(s.sample_rate > 0.0)) throw UnsupportedError("high-pass needs uniformly sampled rows");
}

void HighpassOperator::filter(Eigen::VectorXd& v) const {
  if (cutoff_ <= 0.0) return;
  Eigen::Index off = 0;
  for (Eigen::Index len : s_.block_rows) {
    highpass_inplace(v.data() + off, static_cast<std::size_t>(len), s_.sample_rate, cutoff_);
    off += len;
  }
}

void HighpassOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y = s_.multiply(x);
  filter(y);
}

void HighpassOperator::apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& x) const {
  Eigen::VectorXd py = y;
  filter(py);
  x = s_.multiply_transpose(py);
}

void write_system_matrix(const std::filesystem::path& path, const SystemMatrix& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write system matrix " + path.string());
  out << fmt::format("SHMPI-SYSMAT {} {} {} {}\n", s.rows, s.cols, s.nnz(), s.hash);
  const auto& g = s.grid;
  out << fmt::format("{} {} {} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {}", g.dims[0], g.dims[1],
                     g.dims[2], g.spacing.x(), g.spacing.y(), g.spacing.z(), g.origin.x(), g.origin.y(), g.origin.z(),
                     s.sample_rate, s.block_rows.size());
  for (auto b : s.block_rows) out << ' ' << b;
  out << '\n';
  out.write(reinterpret_cast<const char*>(s.row_ptr.data()),
            static_cast<std::streamsize>(s.row_ptr.size() * sizeof(std::size_t)));
  out.write(reinterpret_cast<const char*>(s.col_idx.data()),
            static_cast<std::streamsize>(s.col_idx.size() * sizeof(std::uint32_t)));
  out.write(reinterpret_cast<const char*>(s.values.data()),
            static_cast<std::streamsize>(s.values.size() * sizeof(double)));
}

SystemMatrix read_system_matrix(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash,
                                bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open system matrix " + path.string());
  SystemMatrix s;
  std::string line, magic;
  std::size_t nnz = 0;
  std::getline(in, line);
  {
    std::istringstream hs(line);
    if (!(hs >> magic >> s.rows >> s.cols >> nnz >> s.hash) || magic != "SHMPI-SYSMAT") {
      throw ParseError("not a system matrix file", 1);
    }
  }
  if (expected_hash && *expected_hash != s.hash) {
    if (!force) {
      throw HashMismatchError(fmt::format("system matrix {} was built for config hash {}, current config is {}",
                                          path.string(), s.hash, *expected_hash));
    }
    spdlog::warn("using system matrix {} despite config hash mismatch", path.string());
  }
  std::getline(in, line);
  {
    std::istringstream ms(line);
    auto& g = s.grid;
    std::size_t blocks = 0;
    if (!(ms >> g.dims[0] >> g.dims[1] >> g.dims[2] >> g.spacing.x() >> g.spacing.y() >> g.spacing.z() >>
          g.origin.x() >> g.origin.y() >> g.origin.z() >> s.sample_rate >> blocks)) {
      throw ParseError("malformed system matrix metadata", 2);
    }
    s.block_rows.resize(blocks);
    for (auto& b : s.block_rows)
      if (!(ms >> b)) throw ParseError("malformed block list", 2);
  }
  s.row_ptr.resize(static_cast<std::size_t>(s.rows) + 1);
  s.col_idx.resize(nnz);
  s.values.resize(nnz);
  auto read = [&](void* dst, std::size_t bytes) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) throw ParseError("system matrix file is truncated", 3);
  };
  read(s.row_ptr.data(), s.row_ptr.size() * sizeof(std::size_t));
  read(s.col_idx.data(), nnz * sizeof(std::uint32_t));
  read(s.values.data(), nnz * sizeof(double));
  if (s.row_ptr.back() != nnz) throw ParseError("system matrix row pointers are inconsistent", 3);
  for (auto k : s.col_idx)
    if (k >= s.cols) throw ParseError("column index out of range", 3);
  s.finalize();
  return s;
}

}  // namespace shmpi
