#pragma once

#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace shmpi {

using Vec3 = Eigen::Vector3d;

/// Associated Legendre function P_l^m(x) for 0 <= m <= l, |x| <= 1, without the
/// Condon-Shortley phase. Upward recurrence in l at fixed m.
double associated_legendre(int l, int m, double x);

/// Real Schmidt semi-normalized spherical harmonic Y_{l,m}(theta, phi).
/// m > 0 selects cos(m phi), m < 0 selects sin(|m| phi). Throws std::domain_error
/// for |m| > l or l < 0.
double spherical_harmonic(int l, int m, double theta, double phi);

/// Homogeneous harmonic polynomial p_{l,m}(r) = |r|^l Y_{l,m}(theta, phi),
/// evaluated directly in Cartesian form (well defined at r = 0).
double harmonic_polynomial(int l, int m, const Vec3& r);

/// Flat index of (l, m) in a table holding every order up to some degree.
constexpr int harmonic_index(int l, int m) { return l * l + l + m; }

/// Number of (l, m) pairs with degree <= lmax.
constexpr int harmonic_count(int lmax) { return (lmax + 1) * (lmax + 1); }

/// Fills out[harmonic_index(l, m)] = p_{l,m}(r) for all l <= lmax.
/// out.size() must be at least harmonic_count(lmax).
void harmonic_polynomials(int lmax, const Vec3& r, std::span<double> out);

}  // namespace shmpi
