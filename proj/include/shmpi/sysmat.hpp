#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "shmpi/forward.hpp"
#include "shmpi/linear_operator.hpp"

namespace shmpi {

/// -mu0 <rho(r), dB/dt(r, t)>.
double kernel(const FieldModel& model, const ReceiveCoil& coil, const Vec3& r, double t);

/// CSR matrix with a transposed copy. Rows are grouped into coil blocks of
/// uniformly sampled time series.
struct SystemMatrix {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  std::vector<std::size_t> col_ptr{0};
  std::vector<std::uint32_t> row_idx;
  std::vector<double> t_values;

  GridSpec grid;
  std::vector<Eigen::Index> block_rows;  // rows per coil block
  double sample_rate = 0.0;
  std::uint64_t hash = 0;

  std::size_t nnz() const { return values.size(); }
  double density() const;
  /// Rebuilds the transposed copy from the CSR arrays.
  void finalize();
  /// Row j is sum_k S_jk c_k accumulated in ascending k.
  Eigen::VectorXd multiply(const Eigen::VectorXd& c) const;
  Eigen::VectorXd multiply_transpose(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd dense() const;
};

struct SysmatOptions {
  int subsampling = 1;
  std::size_t nnz_cap = 150'000'000;
};

/// Config hash over field coefficients, approximation, grid, times, coil and subsampling (FNV-1a).
std::uint64_t system_hash(const FieldModel& model, const MagnetizationApprox& approx, const ReceiveCoil& coil,
                          const std::vector<double>& times, const GridSpec& grid, int subsampling);
std::uint64_t combine_hashes(const std::vector<std::uint64_t>& hashes);

/// Throws ConfigError for an empty or non-uniform time list and ResourceCapError
/// when the (estimated or actual) nnz exceeds opt.nnz_cap.
SystemMatrix build_system_matrix(const FieldModel& model, const MagnetizationApprox& approx,
                                 const ReceiveCoil& coil, const std::vector<double>& times, const GridSpec& grid,
                                 const SysmatOptions& opt = {});

struct StackedSystem {
  SystemMatrix matrix;
  Eigen::VectorXd data;
};
/// Vertical concatenation in coil order; traces may be empty to stack matrices only.
StackedSystem stack_coils(const std::vector<SystemMatrix>& matrices, const std::vector<SignalTrace>& traces);

/// Applies the trace high-pass to every column time series of each coil block.
/// The result is in general dense; meant for small systems.
SystemMatrix apply_highpass_rows(const SystemMatrix& s, double cutoff);

/// P S with P the per-block high-pass projection. P is symmetric, so the
/// adjoint is S^T P.
class HighpassOperator : public LinearOperator {
 public:
  HighpassOperator(const SystemMatrix& s, double cutoff);
  Eigen::Index rows() const override { return s_.rows; }
  Eigen::Index cols() const override { return s_.cols; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override;
  void apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& x) const override;

 private:
  void filter(Eigen::VectorXd& v) const;
  const SystemMatrix& s_;
  double cutoff_;
};

class MatrixOperator : public LinearOperator {
 public:
  explicit MatrixOperator(const SystemMatrix& s) : s_(s) {}
  Eigen::Index rows() const override { return s_.rows; }
  Eigen::Index cols() const override { return s_.cols; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = s_.multiply(x); }
  void apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& x) const override {
    x = s_.multiply_transpose(y);
  }

 private:
  const SystemMatrix& s_;
};

/// Header line `SHMPI-SYSMAT rows cols nnz hash`, a metadata line (grid,
/// sample rate, blocks), then row_ptr, col_idx and values as raw binary.
void write_system_matrix(const std::filesystem::path& path, const SystemMatrix& s);
/// Throws HashMismatchError when expected_hash is given, differs from the file
/// and force is false.
SystemMatrix read_system_matrix(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash = {},
                                bool force = false);

}  // namespace shmpi
