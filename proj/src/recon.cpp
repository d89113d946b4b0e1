#include "shmpi/recon.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "shmpi/errors.hpp"

namespace shmpi {

const char* to_string(LsqrStop s) {
  switch (s) {
    case LsqrStop::iteration_limit: return "iteration_limit";
    case LsqrStop::residual_small: return "residual_small";
    case LsqrStop::normal_residual_small: return "normal_residual_small";
    case LsqrStop::zero_rhs: return "zero_rhs";
    case LsqrStop::zero_operator: return "zero_operator";
  }
  return "?";
}

LsqrResult lsqr_solve(const LinearOperator& a, const Eigen::VectorXd& b, const LsqrOptions& opt) {
  if (opt.max_iterations < 1) throw ConfigError("LSQR needs at least one iteration");
  if (b.size() != a.rows()) throw ConfigError("LSQR data length does not match the operator rows");
  LsqrResult res;
  res.x = Eigen::VectorXd::Zero(a.cols());

  Eigen::VectorXd u = b, v, w, tmp_u, tmp_v;
  double beta = u.norm();
  const double bnorm = beta;
  if (opt.record_residuals) {
    res.residuals.push_back(bnorm);
    res.residual_estimates.push_back(bnorm);
  }
  if (beta == 0.0) {
    res.stop = LsqrStop::zero_rhs;
    return res;
  }
  u /= beta;
  a.apply_transpose(u, v);
  double alpha = v.norm();
  if (alpha == 0.0) {
    res.stop = LsqrStop::zero_operator;
    res.rank_warning = true;
    spdlog::warn("LSQR: A^T b = 0, returning the zero solution");
    return res;
  }
  v /= alpha;
  w = v;

  double rhobar = alpha, phibar = beta, anorm = 0.0;
  const double damp2 = opt.damp * opt.damp;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    a.apply(v, tmp_u);
    u = tmp_u - alpha * u;
    beta = u.norm();
    anorm = std::sqrt(anorm * anorm + alpha * alpha + beta * beta + damp2);
    if (beta > 0.0) {
      u /= beta;
      a.apply_transpose(u, tmp_v);
      v = tmp_v - beta * v;
      alpha = v.norm();
      if (alpha > 0.0) v /= alpha;
    }

    // Eliminate the damping parameter, then the subdiagonal beta.
    const double rhobar1 = std::hypot(rhobar, opt.damp);
    const double cs1 = rhobar / rhobar1;
    const double psi = (opt.damp / rhobar1) * phibar;
    phibar *= cs1;
    const double rho = std::hypot(rhobar1, beta);
    const double cs = rhobar1 / rho, sn = beta / rho;
    const double theta = sn * alpha;
    rhobar = -cs * alpha;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    res.x += (phi / rho) * w;
    w = v - (theta / rho) * w;
    res.iterations = it;
    if (opt.on_iterate) opt.on_iterate(it, res.x);

    if (opt.record_residuals) {
      Eigen::VectorXd ax;
      a.apply(res.x, ax);
      res.residuals.push_back((ax - b).norm());
      res.residual_estimates.push_back(std::hypot(phibar, psi));
    }
    const double rnorm = std::hypot(phibar, psi);
    const double xnorm = res.x.norm();
    const double arnorm = std::abs(phibar * alpha * cs);
    if (rnorm <= opt.btol * bnorm + opt.atol * anorm * xnorm) {
      res.stop = LsqrStop::residual_small;
      break;
    }
    if (rnorm > 0.0 && arnorm / (anorm * rnorm) <= opt.atol) {
      res.stop = LsqrStop::normal_residual_small;
      break;
    }
    if (beta == 0.0 || alpha == 0.0) {
      res.stop = LsqrStop::residual_small;
      break;
    }
  }
  return res;
}

double nrmse(const Eigen::VectorXd& reconstruction, const Eigen::VectorXd& reference) {
  if (reconstruction.size() != reference.size()) throw ConfigError("NRMSE inputs have different sizes");
  const double den = reference.norm();
  if (den == 0.0) throw std::domain_error("NRMSE reference is zero");
  return (reconstruction - reference).norm() / den;
}

double nrmse(const ConcentrationGrid& reconstruction, const ConcentrationGrid& reference) {
  if (!(reconstruction.spec == reference.spec)) throw ConfigError("NRMSE grids differ");
  return nrmse(reconstruction.values, reference.values);
}

ProfilePair profile_compare(const ConcentrationGrid& reconstruction, const ConcentrationGrid& reference, Axis axis,
                            double offset) {
  if (!(reconstruction.spec == reference.spec)) throw ConfigError("profile grids differ");
  return {profile_positions(reference.spec, axis), line_profile(reconstruction, axis, offset),
          line_profile(reference, axis, offset)};
}

void write_residuals_csv(const std::filesystem::path& path, const LsqrResult& r) {
  std::vector<double> it(r.residuals.size());
  for (std::size_t i = 0; i < it.size(); ++i) it[i] = static_cast<double>(i);
  write_columns_csv(path, {"iteration", "residual", "estimate"}, {it, r.residuals, r.residual_estimates});
}

}  // namespace shmpi
