#pragma once
// Independent reference values. Nothing here calls into the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Dirichlet eigenvalues on (0, 1) of -y'' + s delta(x - c) y, s >= 0. With
// y = A sin(kx) on the left and B sin(k(1 - x)) on the right, continuity and
// the derivative jump s y(c) give  k sin k + s sin(kc) sin(k(1 - c)) = 0.
inline std::vector<double> delta_dirichlet(double s, double c, int count) {
  auto D = [&](double k) { return k * std::sin(k) + s * std::sin(k * c) * std::sin(k * (1 - c)); };
  std::vector<double> out;
  const double dk = 1e-3;
  for (double k = dk; static_cast<int>(out.size()) < count; k += dk) {
    if ((D(k) < 0) != (D(k + dk) < 0)) {
      const double r = bisect(D, k, k + dk);
      out.push_back(r * r);
    }
  }
  return out;
}

// #{(m, k) in N^2 : m^2 + k^2 <= r}, the Dirichlet count on (0, pi)^2.
inline long lattice_count(double r) {
  long n = 0;
  for (long m = 1; m * m < r; ++m) {
    const double rest = r - static_cast<double>(m * m);
    long k = static_cast<long>(std::floor(std::sqrt(rest)));
    while ((k + 1) * (k + 1) <= rest) ++k;
    while (k > 0 && k * k > rest) --k;
    n += k;
  }
  return n;
}

inline std::vector<double> square_dirichlet(int count) {
  std::vector<double> v;
  for (int m = 1; m <= 40; ++m)
    for (int k = 1; k <= 40; ++k) v.push_back(m * m + k * k);
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

inline std::vector<double> square_neumann(int count) {
  std::vector<double> v;
  for (int m = 0; m <= 40; ++m)
    for (int k = 0; k <= 40; ++k) v.push_back(m * m + k * k);
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

// J_0 by its power series (adequate for x < 10).
inline double bessel_j0(double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= -(x * x / 4.0) / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

inline double bessel_j0_first_zero() { return bisect(bessel_j0, 2.0, 3.0); }

}  // namespace oracle
