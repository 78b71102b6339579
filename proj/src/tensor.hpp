#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace dmsrec {

// Dense row-major double matrix. Row vectors are 1 x n tensors.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != static_cast<size_t>(r) * c) throw std::invalid_argument("tensor: data size mismatch");
  }

  static Tensor row(std::vector<double> data) {
    int c = static_cast<int>(data.size());
    return Tensor(1, c, std::move(data));
  }

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (auto& x : v) x = rng.uniform(lo, hi);
  }

  bool all_finite() const;
};

// c = a * b
Tensor matmul(const Tensor& a, const Tensor& b);
// c = a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// c = a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// y += alpha * x, elementwise
void axpy(double alpha, const Tensor& x, Tensor& y);

double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dmsrec
