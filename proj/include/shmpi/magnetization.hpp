#pragma once

#include <string>
#include <vector>

namespace shmpi {

/// Langevin function L(x) = coth x - 1/x, with a series near zero.
double langevin(double x);
/// L'(x) = 1/x^2 - 1/sinh^2 x, and exactly 1/3 at x = 0.
double langevin_derivative(double x);
double langevin_second_derivative(double x);

struct LangevinParams {
  double m0 = 1.0;       // A m^2
  double lambda = 4000;  // 1/T

  void validate() const;
};

/// Mean magnetic moment m0 L(lambda |B|) and its derivatives in |B|.
double mbar(const LangevinParams& p, double b_mag);
double mbar_prime(const LangevinParams& p, double b_mag);
double mbar_second(const LangevinParams& p, double b_mag);

enum class Scheme { secant, tangent };
enum class NodeStrategy { equidistant, l1_optimal };

const char* to_string(Scheme s);
const char* to_string(NodeStrategy s);
Scheme scheme_from_string(const std::string& name);
NodeStrategy node_strategy_from_string(const std::string& name);

/// Piecewise constant approximation of mbar' on [0, b), extended evenly and by
/// zero for |x| >= b.
struct MagnetizationApprox {
  std::vector<double> nodes;   // x_0 = 0 < x_1 < ... < x_N < x_{N+1} = b
  std::vector<double> slopes;  // s_0 .. s_N
  Scheme scheme = Scheme::secant;

  double threshold() const { return nodes.back(); }
  int interior_count() const { return static_cast<int>(nodes.size()) - 2; }
  /// Interval n with |x| in [x_n, x_{n+1}), or -1 when |x| >= b.
  int interval(double x) const;
};

/// Interior nodes b k / (N + 1), k = 1..N.
std::vector<double> nodes_equidistant(int n, double b);

/// Interior nodes minimizing the L1 distance between mbar' and its
/// approximation: l1_functional for the tangent scheme, the exact L1 error for
/// the secant scheme. Damped Newton steps on the tridiagonal Hessian until the
/// gradient falls below 1e-10 mbar'(0) in max norm.
std::vector<double> nodes_l1_optimal(int n, double b, const LangevinParams& p, Scheme scheme);

std::vector<double> make_nodes(NodeStrategy strategy, int n, double b, const LangevinParams& p, Scheme scheme);

/// Builds slopes for interior nodes (strictly increasing inside (0, b)).
MagnetizationApprox build_approx(const LangevinParams& p, const std::vector<double>& interior_nodes, double b,
                                 Scheme scheme);

double eval_approx(const MagnetizationApprox& a, double x);
/// Odd, continuous, piecewise linear; constant beyond b.
double eval_approx_antiderivative(const MagnetizationApprox& a, double x);

/// F(x_1..x_N) = sum_k 2 mbar((x_k + x_{k+1})/2) - mbar(x_{k+1}) - mbar(x_k).
double l1_functional(const LangevinParams& p, const std::vector<double>& interior_nodes, double b);
/// Partial derivatives of l1_functional.
std::vector<double> l1_functional_gradient(const LangevinParams& p, const std::vector<double>& interior_nodes,
                                           double b);

/// Exact integral of |mbar' - mbar'_N| over [0, b).
double l1_error(const LangevinParams& p, const MagnetizationApprox& a);
/// Exact sup over [0, b) of |mbar' - mbar'_N| and of |mbar - mbar_N|.
double sup_derivative_error(const LangevinParams& p, const MagnetizationApprox& a);
double sup_antiderivative_error(const LangevinParams& p, const MagnetizationApprox& a);

/// max |mbar''| over `samples` equispaced points of [0, b].
double sup_abs_second_derivative(const LangevinParams& p, double b, int samples = 100000);

struct ErrorBounds {
  double sup_second;       // sup |mbar''|
  double derivative_bound; // sup|mbar''| * max gap
  double value_bound;      // sup|mbar''| * sum gap^2
};
ErrorBounds error_bounds(const LangevinParams& p, const MagnetizationApprox& a, int samples = 100000);

}  // namespace shmpi
