#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Quad = boost::multiprecision::cpp_bin_float_quad;

struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;  // row-major
  std::vector<double> b;
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

// Solves M x = y in place by Gaussian elimination with partial pivoting.
template <class T>
std::vector<T> gauss_solve(std::vector<std::vector<T>> m, std::vector<T> y) {
  const std::size_t n = y.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (abs(m[r][k]) > abs(m[piv][k])) piv = r;
    std::swap(m[k], m[piv]);
    std::swap(y[k], y[piv]);
    for (std::size_t r = k + 1; r < n; ++r) {
      const T f = m[r][k] / m[k][k];
      for (std::size_t c = k; c < n; ++c) m[r][c] -= f * m[k][c];
      y[r] -= f * y[k];
    }
  }
  std::vector<T> x(n);
  for (std::size_t k = n; k-- > 0;) {
    T acc = y[k];
    for (std::size_t c = k + 1; c < n; ++c) acc -= m[k][c] * x[c];
    x[k] = acc / m[k][k];
  }
  return x;
}

// (A^T A)^{-1} A^T b in 113-bit arithmetic.
inline std::vector<double> normal_equations_quad(const Dense& s) {
  std::vector<std::vector<Quad>> ata(s.cols, std::vector<Quad>(s.cols, Quad(0)));
  std::vector<Quad> atb(s.cols, Quad(0));
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t i = 0; i < s.cols; ++i) {
      const Quad ai = s.at(r, i);
      atb[i] += ai * Quad(s.b[r]);
      for (std::size_t j = 0; j < s.cols; ++j) ata[i][j] += ai * Quad(s.at(r, j));
    }
  const auto x = gauss_solve(ata, atb);
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = static_cast<double>(x[j]);
  return out;
}

// Objective |A x - b|^2 through precomputed Gram quantities.
struct Quadratic {
  std::vector<std::vector<double>> g;  // A^T A
  std::vector<double> c;               // A^T b
  double bb = 0.0;

  explicit Quadratic(const Dense& s) : g(s.cols, std::vector<double>(s.cols, 0.0)), c(s.cols, 0.0) {
    for (std::size_t r = 0; r < s.rows; ++r) {
      bb += s.b[r] * s.b[r];
      for (std::size_t i = 0; i < s.cols; ++i) {
        c[i] += s.at(r, i) * s.b[r];
        for (std::size_t j = 0; j < s.cols; ++j) g[i][j] += s.at(r, i) * s.at(r, j);
      }
    }
  }

  double operator()(const std::vector<double>& x) const {
    double v = bb;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v -= 2.0 * c[i] * x[i];
      for (std::size_t j = 0; j < x.size(); ++j) v += x[i] * g[i][j] * x[j];
    }
    return v;
  }
};

inline double direct_objective(const Dense& s, const std::vector<double>& x) {
  double acc = 0.0;
  for (std::size_t r = 0; r < s.rows; ++r) {
    double res = -s.b[r];
    for (std::size_t j = 0; j < s.cols; ++j) res += s.at(r, j) * x[j];
    acc += res * res;
  }
  return acc;
}

// Box minimiser by enumerating every face: each coordinate is pinned to its
// lower bound, its upper bound, or left free. Exact for a strictly convex
// quadratic because the optimum is the stationary point of exactly one face.
inline std::vector<double> box_face_enumeration(const Dense& s, const std::vector<double>& lo,
                                                const std::vector<double>& hi) {
  const std::size_t m = s.cols;
  std::size_t faces = 1;
  for (std::size_t j = 0; j < m; ++j) faces *= 3;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  for (std::size_t code = 0; code < faces; ++code) {
    std::vector<int> state(m);
    std::size_t c = code;
    for (std::size_t j = 0; j < m; ++j, c /= 3) state[j] = static_cast<int>(c % 3);
    std::vector<double> x(m, 0.0);
    std::vector<std::size_t> free;
    bool skip = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (state[j] == 0) {
        free.push_back(j);
      } else {
        x[j] = state[j] == 1 ? lo[j] : hi[j];
        if (!std::isfinite(x[j])) skip = true;
      }
    }
    if (skip) continue;
    if (!free.empty()) {
      std::vector<std::vector<Quad>> ata(free.size(), std::vector<Quad>(free.size(), Quad(0)));
      std::vector<Quad> rhs(free.size(), Quad(0));
      for (std::size_t r = 0; r < s.rows; ++r) {
        Quad res = s.b[r];
        for (std::size_t j = 0; j < m; ++j)
          if (state[j] != 0) res -= Quad(s.at(r, j)) * Quad(x[j]);
        for (std::size_t p = 0; p < free.size(); ++p) {
          const Quad ap = s.at(r, free[p]);
          rhs[p] += ap * res;
          for (std::size_t q = 0; q < free.size(); ++q) ata[p][q] += ap * Quad(s.at(r, free[q]));
        }
      }
      const auto sol = gauss_solve(ata, rhs);
      for (std::size_t p = 0; p < free.size(); ++p) {
        x[free[p]] = static_cast<double>(sol[p]);
        if (x[free[p]] < lo[free[p]] || x[free[p]] > hi[free[p]]) skip = true;
      }
    }
    if (skip) continue;
    const double f = direct_objective(s, x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

// Smallest objective on a uniform grid covering a finite 2-D box (boundary
// included).
inline double grid_minimum_2d(const Dense& s, const std::vector<double>& lo,
                              const std::vector<double>& hi, double step) {
  const Quadratic q(s);
  const auto n0 = static_cast<std::size_t>(std::ceil((hi[0] - lo[0]) / step));
  const auto n1 = static_cast<std::size_t>(std::ceil((hi[1] - lo[1]) / step));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(2);
  for (std::size_t a = 0; a <= n0; ++a) {
    x[0] = std::min(hi[0], lo[0] + static_cast<double>(a) * step);
    for (std::size_t b = 0; b <= n1; ++b) {
      x[1] = std::min(hi[1], lo[1] + static_cast<double>(b) * step);
      best = std::min(best, q(x));
    }
  }
  return best;
}

// Random full-rank system with K' rows and m columns of mixed scale.
inline Dense random_system(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Dense s;
  s.rows = rows;
  s.cols = cols;
  s.a.resize(rows * cols);
  s.b.resize(rows);
  for (auto& v : s.a) v = n01(rng);
  for (auto& v : s.b) v = n01(rng);
  return s;
}

// RC thermal step written directly from the continuous-time solution under a
// zero-order hold, with heat i * (v - eta(soc)) from a power-sum polynomial.
inline double thermal_step(double ts, double ta, double i, double v, double soc, double r_t,
                           double c_t, const std::vector<double>& eta, double dt) {
  long double e = 0.0L, pw = 1.0L;
  for (double c : eta) {
    e += static_cast<long double>(c) * pw;
    pw *= soc;
  }
  const long double heat = static_cast<long double>(i) * (static_cast<long double>(v) - e);
  const long double decay = std::exp(-static_cast<long double>(dt) / (static_cast<long double>(r_t) * c_t));
  const long double t_inf = static_cast<long double>(ta) + static_cast<long double>(r_t) * heat;
  return static_cast<double>(t_inf + (static_cast<long double>(ts) - t_inf) * decay);
}

inline double relative_l2(const std::vector<double>& x, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    num += (x[j] - ref[j]) * (x[j] - ref[j]);
    den += ref[j] * ref[j];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

}  // namespace oracle
