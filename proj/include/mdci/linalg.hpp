#pragma once

// Small dense linear algebra for d in [1, 20]: symmetric eigen via Jacobi
// sweeps, SPD square roots and inverses, Cholesky.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mdci {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec operator*(double c, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    a_.reserve(static_cast<std::size_t>(rows_) * cols_);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != cols_)
        throw std::invalid_argument("Mat: ragged initializer");
      for (double v : r) a_.push_back(v);
    }
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diag(const Vec& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec r(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

inline Mat transpose(const Mat& m) {
  Mat r(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(j, i) = m(i, j);
  return r;
}

inline double frobenius(const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline double quad_form(const Vec& x, const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) s += x[i] * m(i, j) * x[j];
  return s;
}

inline double max_abs(const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) s = std::max(s, std::fabs(m(i, j)));
  return s;
}

inline double asymmetry(const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) s = std::max(s, std::fabs(m(i, j) - m(j, i)));
  return s;
}

inline bool is_symmetric(const Mat& m, double tol) {
  return m.rows() == m.cols() && asymmetry(m) <= tol * std::max(1.0, max_abs(m));
}

struct SymEig {
  Vec values;   // descending
  Mat vectors;  // orthonormal columns, vectors.col(k) pairs with values[k]
};

// Cyclic Jacobi rotations; d is small so quadratic convergence dominates.
inline SymEig sym_eig(const Mat& m) {
  const int n = m.rows();
  if (n != m.cols()) throw std::domain_error("sym_eig: matrix not square");
  if (!is_symmetric(m, 1e-8)) {
    std::ostringstream os;
    os << "sym_eig: asymmetry " << asymmetry(m) << " exceeds tolerance";
    throw std::domain_error(os.str());
  }
  Mat a = m;
  // symmetrize exactly so the sweeps preserve symmetry bit-for-bit
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = v;
    }
  Mat v = Mat::identity(n);
  const double scale = std::max(1.0, max_abs(a));
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::fabs(a(i, j)));
    if (off <= 1e-15 * scale) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= 1e-18 * scale) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

namespace detail {

inline Mat sym_func(const Mat& m, double (*f)(double), const char* who, double min_eig_floor) {
  const SymEig e = sym_eig(m);
  const double mineig = e.values.back();
  if (mineig < min_eig_floor) {
    std::ostringstream os;
    os << who << ": matrix not SPD, min eigenvalue " << mineig;
    throw std::domain_error(os.str());
  }
  const int n = m.rows();
  Mat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += e.vectors(i, k) * f(e.values[k]) * e.vectors(j, k);
      r(i, j) = s;
    }
  // exact symmetry for downstream checks
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double t = 0.5 * (r(i, j) + r(j, i));
      r(i, j) = r(j, i) = t;
    }
  return r;
}

}  // namespace detail

inline Mat matrix_sqrt_spd(const Mat& m) {
  return detail::sym_func(m, [](double x) { return std::sqrt(x); }, "matrix_sqrt_spd", 1e-10);
}

inline Mat spd_inverse(const Mat& m) {
  return detail::sym_func(m, [](double x) { return 1.0 / x; }, "spd_inverse", 1e-10);
}

inline Mat spd_inverse_sqrt(const Mat& m) {
  return detail::sym_func(m, [](double x) { return 1.0 / std::sqrt(x); }, "spd_inverse_sqrt",
                          1e-10);
}

inline Mat cholesky(const Mat& m) {
  const int n = m.rows();
  Mat l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::domain_error("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

inline double spectral_norm_sym(const Mat& m) {
  const SymEig e = sym_eig(m);
  return std::max(std::fabs(e.values.front()), std::fabs(e.values.back()));
}

}  // namespace mdci
