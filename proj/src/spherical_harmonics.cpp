#include "shmpi/spherical_harmonics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace shmpi {

namespace {

void check_degree_order(int l, int m) {
  if (l < 0 || std::abs(m) > l) {
    throw std::domain_error("spherical harmonic requires |m| <= l, got l=" + std::to_string(l) +
                            " m=" + std::to_string(m));
  }
}

// sqrt(2 (l-m)! / (l+m)!) for m > 0, 1 for m == 0.
double schmidt_factor(int l, int m) {
  if (m == 0) return 1.0;
  double ratio = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  return std::sqrt(2.0 * ratio);
}

double double_factorial_odd(int m) {
  double v = 1.0;
  for (int k = 2 * m - 1; k > 1; k -= 2) v *= k;
  return v;
}

}  // namespace

double associated_legendre(int l, int m, double x) {
  if (m < 0 || m > l) throw std::domain_error("associated_legendre requires 0 <= m <= l");
  double pmm = double_factorial_odd(m) * std::pow(std::max(0.0, (1.0 - x) * (1.0 + x)), 0.5 * m);
  if (l == m) return pmm;
  double pm1 = x * (2 * m + 1) * pmm;
  for (int ll = m + 2; ll <= l; ++ll) {
    const double pll = ((2 * ll - 1) * x * pm1 - (ll + m - 1) * pmm) / (ll - m);
    pmm = pm1;
    pm1 = pll;
  }
  return pm1;
}

double spherical_harmonic(int l, int m, double theta, double phi) {
  check_degree_order(l, m);
  const int am = std::abs(m);
  const double p = associated_legendre(l, am, std::cos(theta));
  if (m == 0) return p;
  const double angular = m > 0 ? std::cos(am * phi) : std::sin(am * phi);
  return schmidt_factor(l, am) * p * angular;
}

void harmonic_polynomials(int lmax, const Vec3& r, std::span<double> out) {
  if (lmax < 0) throw std::domain_error("harmonic_polynomials requires lmax >= 0");
  if (static_cast<int>(out.size()) < harmonic_count(lmax)) {
    throw std::invalid_argument("harmonic_polynomials: output span too small");
  }
  const double x = r.x(), y = r.y(), z = r.z();
  const double r2 = r.squaredNorm();

  // Re/Im of (x + iy)^m carry the r^m sin^m(theta) {cos,sin}(m phi) factor.
  double cm = 1.0, sm = 0.0;
  for (int m = 0; m <= lmax; ++m) {
    // H_l^m = r^(l-m) P_l^m(z/r) / sin^m(theta), a polynomial in (z, r^2).
    double h_prev = 0.0;
    double h = double_factorial_odd(m);
    for (int l = m; l <= lmax; ++l) {
      if (l == m + 1) {
        h_prev = h;
        h = (2 * m + 1) * z * h_prev;
      } else if (l > m + 1) {
        const double next = ((2 * l - 1) * z * h - (l + m - 1) * r2 * h_prev) / (l - m);
        h_prev = h;
        h = next;
      }
      if (m == 0) {
        out[harmonic_index(l, 0)] = h;
      } else {
        const double f = schmidt_factor(l, m) * h;
        out[harmonic_index(l, m)] = f * cm;
        out[harmonic_index(l, -m)] = f * sm;
      }
    }
    const double c_next = cm * x - sm * y;
    sm = cm * y + sm * x;
    cm = c_next;
  }
}

double harmonic_polynomial(int l, int m, const Vec3& r) {
  check_degree_order(l, m);
  std::vector<double> table(harmonic_count(l));
  harmonic_polynomials(l, r, table);
  return table[harmonic_index(l, m)];
}

}  // namespace shmpi
