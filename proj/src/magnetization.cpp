#include "shmpi/magnetization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "shmpi/errors.hpp"

namespace shmpi {

double langevin(double x) {
  if (std::abs(x) < 1e-4) return x / 3.0 - x * x * x / 45.0;
  return 1.0 / std::tanh(x) - 1.0 / x;
}

double langevin_derivative(double x) {
  if (x == 0.0) return 1.0 / 3.0;
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return 1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0;
  }
  const double s = std::sinh(x);
  return 1.0 / (x * x) - 1.0 / (s * s);
}

double langevin_second_derivative(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return -2.0 * x / 15.0 + 8.0 * x * x2 / 189.0;
  }
  const double s = std::sinh(x);
  return -2.0 / (x * x * x) + 2.0 / (std::tanh(x) * s * s);
}

void LangevinParams::validate() const {
  if (!(m0 > 0.0) || !(lambda > 0.0)) {
    throw ConfigError(fmt::format("Langevin parameters must be positive (m0={}, lambda={})", m0, lambda));
  }
}

double mbar(const LangevinParams& p, double b) { return p.m0 * langevin(p.lambda * b); }
double mbar_prime(const LangevinParams& p, double b) { return p.m0 * p.lambda * langevin_derivative(p.lambda * b); }
double mbar_second(const LangevinParams& p, double b) {
  return p.m0 * p.lambda * p.lambda * langevin_second_derivative(p.lambda * b);
}

const char* to_string(Scheme s) { return s == Scheme::secant ? "secant" : "tangent"; }
const char* to_string(NodeStrategy s) { return s == NodeStrategy::equidistant ? "equidistant" : "l1_optimal"; }

Scheme scheme_from_string(const std::string& name) {
  if (name == "secant") return Scheme::secant;
  if (name == "tangent") return Scheme::tangent;
  throw ConfigError("unknown approximation scheme '" + name + "'");
}

NodeStrategy node_strategy_from_string(const std::string& name) {
  if (name == "equidistant") return NodeStrategy::equidistant;
  if (name == "l1_optimal" || name == "l1") return NodeStrategy::l1_optimal;
  throw ConfigError("unknown node strategy '" + name + "'");
}

int MagnetizationApprox::interval(double x) const {
  const double ax = std::abs(x);
  if (!(ax < nodes.back())) return -1;
  const auto it = std::upper_bound(nodes.begin() + 1, nodes.end() - 1, ax);
  return static_cast<int>(it - nodes.begin()) - 1;
}

std::vector<double> nodes_equidistant(int n, double b) {
  if (n < 0 || !(b > 0.0)) throw std::domain_error("nodes_equidistant requires N >= 0 and b > 0");
  std::vector<double> x(n);
  for (int k = 1; k <= n; ++k) x[k - 1] = b * k / (n + 1);
  return x;
}

namespace {

std::vector<double> full_nodes(const std::vector<double>& interior, double b) {
  std::vector<double> x;
  x.reserve(interior.size() + 2);
  x.push_back(0.0);
  x.insert(x.end(), interior.begin(), interior.end());
  x.push_back(b);
  return x;
}

// Point in [a, c] where the decreasing mbar' equals s.
double crossing(const LangevinParams& p, double a, double c, double s) {
  if (s >= mbar_prime(p, a)) return a;
  if (s <= mbar_prime(p, c)) return c;
  double lo = a, hi = c;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mbar_prime(p, mid) > s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double interval_l1(const LangevinParams& p, double a, double c, double s) {
  const double xi = crossing(p, a, c, s);
  const double m_xi = mbar(p, xi);
  return (m_xi - mbar(p, a) - s * (xi - a)) + (s * (c - xi) - mbar(p, c) + m_xi);
}

double secant_slope(const LangevinParams& p, double a, double c) { return (mbar(p, c) - mbar(p, a)) / (c - a); }

void require_monotone_derivative(const LangevinParams& p, double b) {
  // Sampled check that mbar' is positive and strictly decreasing on [0, b].
  double prev = mbar_prime(p, 0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double v = mbar_prime(p, b * i / 1000.0);
    if (!(v > 0.0) || !(v < prev)) {
      throw UnsupportedError("L1-optimal nodes need a positive, strictly decreasing mbar' on [0, b)");
    }
    prev = v;
  }
}

// d/dc and d/da of the exact L1 error on [a, c] with the chord slope. Since the
// chord slope integrates mbar' - s to zero, the error is 2 (mbar(xi) - mbar(a) - s (xi - a)).
double secant_partial_right(const LangevinParams& p, double a, double c) {
  const double s = secant_slope(p, a, c);
  const double xi = crossing(p, a, c, s);
  return -2.0 * (xi - a) * (mbar_prime(p, c) - s) / (c - a);
}

double secant_partial_left(const LangevinParams& p, double a, double c) {
  const double s = secant_slope(p, a, c);
  const double xi = crossing(p, a, c, s);
  return 2.0 * (s - mbar_prime(p, a)) * (c - xi) / (c - a);
}

// Partial derivative of the objective in x[i] (full node vector, x[0] = 0, x.back() = b).
double objective_partial(const LangevinParams& p, Scheme scheme, const std::vector<double>& x, std::size_t i,
                         double xi) {
  if (scheme == Scheme::tangent) {
    return mbar_prime(p, 0.5 * (x[i - 1] + xi)) + mbar_prime(p, 0.5 * (xi + x[i + 1])) - 2.0 * mbar_prime(p, xi);
  }
  return secant_partial_right(p, x[i - 1], xi) + secant_partial_left(p, xi, x[i + 1]);
}

std::vector<double> objective_gradient(const LangevinParams& p, Scheme scheme, const std::vector<double>& x) {
  std::vector<double> g(x.size() - 2);
  for (std::size_t i = 1; i + 1 < x.size(); ++i) g[i - 1] = objective_partial(p, scheme, x, i, x[i]);
  return g;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// One Gauss-Seidel sweep: each coordinate moves to the root of its partial
// derivative, which is negative at the left neighbour and positive at the right one.
void bisection_sweep(const LangevinParams& p, Scheme scheme, std::vector<double>& x) {
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    double lo = x[i - 1], hi = x[i + 1];
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (objective_partial(p, scheme, x, i, mid) < 0.0 ? lo : hi) = mid;
    }
    x[i] = 0.5 * (lo + hi);
  }
}

// Newton step on the tridiagonal Hessian (each partial depends on the neighbours
// only). The Hessian is formed by differencing the analytic gradient.
bool newton_step(const LangevinParams& p, Scheme scheme, std::vector<double>& x, std::vector<double>& grad) {
  const std::size_t n = grad.size();
  const double b = x.back();
  std::vector<double> diag(n), lower(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-7 * b;
    auto xp = x, xm = x;
    xp[i + 1] += h;
    xm[i + 1] -= h;
    for (std::size_t r = (i == 0 ? 0 : i - 1); r <= std::min(n - 1, i + 1); ++r) {
      const double d = (objective_partial(p, scheme, xp, r + 1, xp[r + 1]) -
                        objective_partial(p, scheme, xm, r + 1, xm[r + 1])) / (2.0 * h);
      if (r == i) diag[r] = d;
      else if (r + 1 == i) upper[r] = d;
      else lower[r] = d;
    }
  }
  // Thomas algorithm for H step = -grad.
  std::vector<double> c(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = diag[i] - (i > 0 ? lower[i] * c[i - 1] : 0.0);
    if (!(m > 0.0)) return false;
    c[i] = upper[i] / m;
    d[i] = (-grad[i] - (i > 0 ? lower[i] * d[i - 1] : 0.0)) / m;
  }
  for (std::size_t i = n; i-- > 1;) d[i - 1] -= c[i - 1] * d[i];

  const double g0 = max_abs(grad);
  for (double t = 1.0; t > 1e-6; t *= 0.5) {
    auto trial = x;
    bool ordered = true;
    for (std::size_t i = 0; i < n; ++i) trial[i + 1] += t * d[i];
    for (std::size_t i = 0; i + 1 < trial.size(); ++i) ordered = ordered && trial[i] < trial[i + 1];
    if (!ordered) continue;
    auto g = objective_gradient(p, scheme, trial);
    if (max_abs(g) < g0) {
      x = std::move(trial);
      grad = std::move(g);
      return true;
    }
  }
  return false;
}

std::vector<double> l1_optimal_nodes(int n, double b, const LangevinParams& p, Scheme scheme) {
  auto x = full_nodes(nodes_equidistant(n, b), b);
  const double tol = 1e-10 * mbar_prime(p, 0.0);
  auto grad = objective_gradient(p, scheme, x);
  for (int iter = 0; iter < 2000; ++iter) {
    if (max_abs(grad) < tol) return {x.begin() + 1, x.end() - 1};
    if (!newton_step(p, scheme, x, grad)) {
      bisection_sweep(p, scheme, x);
      grad = objective_gradient(p, scheme, x);
    }
  }
  throw std::runtime_error(fmt::format("L1-optimal node search did not converge (gradient {})", max_abs(grad)));
}

}  // namespace

std::vector<double> nodes_l1_optimal(int n, double b, const LangevinParams& p, Scheme scheme) {
  if (n < 0 || !(b > 0.0)) throw std::domain_error("nodes_l1_optimal requires N >= 0 and b > 0");
  p.validate();
  require_monotone_derivative(p, b);
  if (n == 0) return {};
  return l1_optimal_nodes(n, b, p, scheme);
}

std::vector<double> make_nodes(NodeStrategy strategy, int n, double b, const LangevinParams& p, Scheme scheme) {
  return strategy == NodeStrategy::equidistant ? nodes_equidistant(n, b) : nodes_l1_optimal(n, b, p, scheme);
}

MagnetizationApprox build_approx(const LangevinParams& p, const std::vector<double>& interior, double b,
                                 Scheme scheme) {
  p.validate();
  if (!(b > 0.0)) throw std::domain_error("approximation threshold b must be positive");
  MagnetizationApprox a;
  a.scheme = scheme;
  a.nodes = full_nodes(interior, b);
  for (std::size_t k = 0; k + 1 < a.nodes.size(); ++k) {
    if (!(a.nodes[k] < a.nodes[k + 1])) {
      throw std::domain_error("approximation nodes must be strictly increasing inside (0, b)");
    }
  }
  const int n = static_cast<int>(interior.size());
  a.slopes.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double lo = a.nodes[k], hi = a.nodes[k + 1];
    if (scheme == Scheme::secant) {
      a.slopes[k] = secant_slope(p, lo, hi);
    } else {
      a.slopes[k] = k == 0 ? mbar_prime(p, 0.0) : mbar_prime(p, 0.5 * (lo + hi));
    }
  }
  return a;
}

double eval_approx(const MagnetizationApprox& a, double x) {
  const int n = a.interval(x);
  return n < 0 ? 0.0 : a.slopes[n];
}

double eval_approx_antiderivative(const MagnetizationApprox& a, double x) {
  const double ax = std::min(std::abs(x), a.threshold());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.slopes.size(); ++k) {
    const double lo = a.nodes[k], hi = a.nodes[k + 1];
    if (ax <= lo) break;
    acc += a.slopes[k] * (std::min(ax, hi) - lo);
  }
  return x < 0.0 ? -acc : acc;
}

double l1_functional(const LangevinParams& p, const std::vector<double>& interior, double b) {
  const auto x = full_nodes(interior, b);
  double f = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    f += 2.0 * mbar(p, 0.5 * (x[k] + x[k + 1])) - mbar(p, x[k + 1]) - mbar(p, x[k]);
  }
  return f;
}

std::vector<double> l1_functional_gradient(const LangevinParams& p, const std::vector<double>& interior, double b) {
  const auto x = full_nodes(interior, b);
  std::vector<double> g(interior.size());
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    g[i - 1] = mbar_prime(p, 0.5 * (x[i - 1] + x[i])) + mbar_prime(p, 0.5 * (x[i] + x[i + 1])) -
               2.0 * mbar_prime(p, x[i]);
  }
  return g;
}

double l1_error(const LangevinParams& p, const MagnetizationApprox& a) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.slopes.size(); ++k) acc += interval_l1(p, a.nodes[k], a.nodes[k + 1], a.slopes[k]);
  return acc;
}

double sup_derivative_error(const LangevinParams& p, const MagnetizationApprox& a) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.slopes.size(); ++k) {
    worst = std::max({worst, std::abs(mbar_prime(p, a.nodes[k]) - a.slopes[k]),
                      std::abs(mbar_prime(p, a.nodes[k + 1]) - a.slopes[k])});
  }
  return worst;
}

double sup_antiderivative_error(const LangevinParams& p, const MagnetizationApprox& a) {
  double worst = 0.0, approx_at_node = 0.0;
  for (std::size_t k = 0; k < a.slopes.size(); ++k) {
    const double lo = a.nodes[k], hi = a.nodes[k + 1], s = a.slopes[k];
    const double xi = crossing(p, lo, hi, s);
    for (double x : {lo, xi, hi}) {
      worst = std::max(worst, std::abs(mbar(p, x) - (approx_at_node + s * (x - lo))));
    }
    approx_at_node += s * (hi - lo);
  }
  return worst;
}

double sup_abs_second_derivative(const LangevinParams& p, double b, int samples) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) worst = std::max(worst, std::abs(mbar_second(p, b * i / (samples - 1.0))));
  return worst;
}

ErrorBounds error_bounds(const LangevinParams& p, const MagnetizationApprox& a, int samples) {
  ErrorBounds e{};
  e.sup_second = sup_abs_second_derivative(p, a.threshold(), samples);
  double max_gap = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k + 1 < a.nodes.size(); ++k) {
    const double gap = a.nodes[k + 1] - a.nodes[k];
    max_gap = std::max(max_gap, gap);
    sum_sq += gap * gap;
  }
  e.derivative_bound = e.sup_second * max_gap;
  e.value_bound = e.sup_second * sum_sq;
  return e;
}

}  // namespace shmpi
