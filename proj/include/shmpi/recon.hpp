#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "shmpi/linear_operator.hpp"
#include "shmpi/phantom.hpp"

namespace shmpi {

struct LsqrOptions {
  int max_iterations = 20;
  double atol = 1e-8;
  double btol = 1e-8;
  double damp = 0.0;
  bool record_residuals = true;
  /// Called after every iteration with (iteration, current x).
  std::function<void(int, const Eigen::VectorXd&)> on_iterate;
};

enum class LsqrStop { iteration_limit, residual_small, normal_residual_small, zero_rhs, zero_operator };
const char* to_string(LsqrStop s);

struct LsqrResult {
  Eigen::VectorXd x;
  /// ||A x_i - b|| for i = 0 (x = 0) .. iterations, when recorded.
  std::vector<double> residuals;
  /// The bidiagonalization estimate phibar of the same norm.
  std::vector<double> residual_estimates;
  int iterations = 0;
  LsqrStop stop = LsqrStop::iteration_limit;
  /// Set when b != 0 but A^T b = 0: nothing of b can be explained.
  bool rank_warning = false;
};

/// Paige-Saunders LSQR from x = 0.
LsqrResult lsqr_solve(const LinearOperator& a, const Eigen::VectorXd& b, const LsqrOptions& opt = {});

/// ||a - b|| / ||b||.
double nrmse(const Eigen::VectorXd& reconstruction, const Eigen::VectorXd& reference);
double nrmse(const ConcentrationGrid& reconstruction, const ConcentrationGrid& reference);

struct ProfilePair {
  std::vector<double> positions;
  std::vector<double> reconstruction;
  std::vector<double> reference;
};
ProfilePair profile_compare(const ConcentrationGrid& reconstruction, const ConcentrationGrid& reference, Axis axis,
                            double offset);

void write_residuals_csv(const std::filesystem::path& path, const LsqrResult& r);

}  // namespace shmpi
