#include "tensor.hpp"

#include <cmath>
#include <cstdlib>

namespace dmsrec {

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims differ");
  Tensor c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.v[static_cast<size_t>(i) * a.cols];
    double* ci = &c.v[static_cast<size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = &b.v[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: inner dims differ");
  Tensor c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.v[static_cast<size_t>(i) * a.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = &b.v[static_cast<size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      c.at(i, j) = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: inner dims differ");
  Tensor c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* ak = &a.v[static_cast<size_t>(k) * a.cols];
    const double* bk = &b.v[static_cast<size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = &c.v[static_cast<size_t>(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  Tensor c(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) c.at(j, i) = a.at(i, j);
  return c;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("axpy: shape mismatch");
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] += alpha * x.v[i];
}

double dot(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace dmsrec
