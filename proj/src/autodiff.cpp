#include "autodiff.hpp"

#include <cmath>

namespace dmsrec {

Var Tape::leaf(Tensor value, bool needs_grad) {
  return push(std::move(value), needs_grad, nullptr);
}

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) {
    n.grad = Tensor(n.value.rows, n.value.cols);
    n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss) {
  if (val(loss).size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad.v[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.back) n.back(*this, i);
  }
}

namespace {

bool any_grad(std::initializer_list<Var> xs) {
  for (Var x : xs)
    if (x.tape->needs_grad(x)) return true;
  return false;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  Tensor out = matmul(t.val(a), t.val(b));
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) {
      Tensor da = matmul_nt(g, t.val(b));
      axpy(1.0, da, t.grad_at(a.id));
    }
    if (t.needs_grad(b)) {
      Tensor db = matmul_tn(t.val(a), g);
      axpy(1.0, db, t.grad_at(b.id));
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = *a.tape;
  Tensor out = matmul_nt(t.val(a), t.val(b));
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) {
      Tensor da = matmul(g, t.val(b));
      axpy(1.0, da, t.grad_at(a.id));
    }
    if (t.needs_grad(b)) {
      Tensor db = matmul_tn(g, t.val(a));
      axpy(1.0, db, t.grad_at(b.id));
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  if (!t.val(a).same_shape(t.val(b))) throw std::invalid_argument("add: shape mismatch");
  Tensor out = t.val(a);
  axpy(1.0, t.val(b), out);
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) axpy(1.0, g, t.grad_at(a.id));
    if (t.needs_grad(b)) axpy(1.0, g, t.grad_at(b.id));
  });
}

Var add_rowvec(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (bv.rows != 1 || bv.cols != av.cols) throw std::invalid_argument("add_rowvec: bad bias shape");
  Tensor out = av;
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out.at(i, j) += bv.at(0, j);
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) axpy(1.0, g, t.grad_at(a.id));
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_at(b.id);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  if (!t.val(a).same_shape(t.val(b))) throw std::invalid_argument("sub: shape mismatch");
  Tensor out = t.val(a);
  axpy(-1.0, t.val(b), out);
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) axpy(1.0, g, t.grad_at(a.id));
    if (t.needs_grad(b)) axpy(-1.0, g, t.grad_at(b.id));
  });
}

Var mul(Var a, Var b) {
  Tape& t = *a.tape;
  if (!t.val(a).same_shape(t.val(b))) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = t.val(a);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= t.val(b).v[i];
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_at(a.id);
      const Tensor& bv = t.val(b);
      for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * bv.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_at(b.id);
      const Tensor& av = t.val(a);
      for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * av.v[i];
    }
  });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  Tensor out = t.val(a);
  for (auto& x : out.v) x *= c;
  return t.push(std::move(out), t.needs_grad(a), [a, c](Tape& t, int self) {
    axpy(c, t.grad_at(self), t.grad_at(a.id));
  });
}

Var rep_rows(Var a, int n) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  if (av.rows != 1) throw std::invalid_argument("rep_rows: input must be a row");
  Tensor out(n, av.cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(0, j);
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga.at(0, j) += g.at(i, j);
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rows != bv.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Tensor out(av.rows, av.cols + bv.cols);
  for (int i = 0; i < av.rows; ++i) {
    for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < bv.cols; ++j) out.at(i, av.cols + j) = bv.at(i, j);
  }
  int ac = av.cols;
  return t.push(std::move(out), any_grad({a, b}), [a, b, ac](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_at(a.id);
      for (int i = 0; i < ga.rows; ++i)
        for (int j = 0; j < ac; ++j) ga.at(i, j) += g.at(i, j);
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_at(b.id);
      for (int i = 0; i < gb.rows; ++i)
        for (int j = 0; j < gb.cols; ++j) gb.at(i, j) += g.at(i, ac + j);
    }
  });
}

Var transpose_v(Var a) {
  Tape& t = *a.tape;
  return t.push(transpose(t.val(a)), t.needs_grad(a), [a](Tape& t, int self) {
    Tensor g = transpose(t.grad_at(self));
    axpy(1.0, g, t.grad_at(a.id));
  });
}

namespace {

template <typename F, typename DF>
Var unary_elementwise(Var a, F f, DF df_from_y) {
  Tape& t = *a.tape;
  Tensor out = t.val(a);
  for (auto& x : out.v) x = f(x);
  return t.push(std::move(out), t.needs_grad(a), [a, df_from_y](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& y = t.val(Var{&t, self});
    Tensor& ga = t.grad_at(a.id);
    for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * df_from_y(y.v[i]);
  });
}

}  // namespace

Var sigmoid(Var a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double y) { return y * (1.0 - y); });
}

Var tanh_v(Var a) {
  return unary_elementwise(a, [](double x) { return std::tanh(x); },
                           [](double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary_elementwise(a, [](double x) { return x > 0.0 ? x : 0.0; },
                           [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

Var log_v(Var a) {
  Tape& t = *a.tape;
  Tensor out = t.val(a);
  for (auto& x : out.v) x = std::log(x);
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& x = t.val(a);
    Tensor& ga = t.grad_at(a.id);
    for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] / x.v[i];
  });
}

Var sqrt_v(Var a) {
  return unary_elementwise(a, [](double x) { return std::sqrt(x); },
                           [](double y) { return 0.5 / y; });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  Tensor out = t.val(a);
  for (auto& x : out.v) x = std::min(std::max(x, lo), hi);
  return t.push(std::move(out), t.needs_grad(a), [a, lo, hi](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& x = t.val(a);
    Tensor& ga = t.grad_at(a.id);
    for (size_t i = 0; i < g.v.size(); ++i)
      if (x.v[i] > lo && x.v[i] < hi) ga.v[i] += g.v[i];
  });
}

namespace {

void softmax_into(const double* x, double* y, int n) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - mx);
    s += y[i];
  }
  for (int i = 0; i < n; ++i) y[i] /= s;
}

}  // namespace

Var softmax_row(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  Tensor out(av.rows, av.cols);
  for (int i = 0; i < av.rows; ++i)
    softmax_into(&av.v[static_cast<size_t>(i) * av.cols], &out.v[static_cast<size_t>(i) * av.cols], av.cols);
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& y = t.val(Var{&t, self});
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < g.rows; ++i) {
      double gy = 0.0;
      for (int j = 0; j < g.cols; ++j) gy += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - gy);
    }
  });
}

Var log_softmax_row(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  Tensor out(av.rows, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    const double* x = &av.v[static_cast<size_t>(i) * av.cols];
    double* y = &out.v[static_cast<size_t>(i) * av.cols];
    double mx = x[0];
    for (int j = 1; j < av.cols; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += std::exp(x[j] - mx);
    double lse = mx + std::log(s);
    for (int j = 0; j < av.cols; ++j) y[j] = x[j] - lse;
  }
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& y = t.val(Var{&t, self});
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < g.rows; ++i) {
      double gs = 0.0;
      for (int j = 0; j < g.cols; ++j) gs += g.at(i, j);
      for (int j = 0; j < g.cols; ++j) ga.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gs;
    }
  });
}

Var logsumexp_row(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  Tensor out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    const double* x = &av.v[static_cast<size_t>(i) * av.cols];
    double mx = x[0];
    for (int j = 1; j < av.cols; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += std::exp(x[j] - mx);
    out.at(i, 0) = mx + std::log(s);
  }
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& y = t.val(Var{&t, self});
    const Tensor& x = t.val(a);
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j)
        ga.at(i, j) += g.at(i, 0) * std::exp(x.at(i, j) - y.at(i, 0));
  });
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  Tensor out(1, 1);
  for (double x : t.val(a).v) out.v[0] += x;
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    double g = t.grad_at(self).v[0];
    Tensor& ga = t.grad_at(a.id);
    for (auto& x : ga.v) x += g;
  });
}

Var detach(Var a) {
  Tape& t = *a.tape;
  return t.leaf(t.val(a), false);
}

Var exp_v(Var a) {
  return unary_elementwise(a, [](double x) { return std::exp(x); },
                           [](double y) { return y; });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  Tape& t = *rows.front().tape;
  int cols = t.val(rows.front()).cols;
  Tensor out(static_cast<int>(rows.size()), cols);
  bool needs = false;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Tensor& r = t.val(rows[i]);
    if (r.rows != 1 || r.cols != cols) throw std::invalid_argument("stack_rows: shape mismatch");
    for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = r.at(0, j);
    needs = needs || t.needs_grad(rows[i]);
  }
  return t.push(std::move(out), needs, [rows](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!t.needs_grad(rows[i])) continue;
      Tensor& gr = t.grad_at(rows[i].id);
      for (int j = 0; j < g.cols; ++j) gr.at(0, j) += g.at(static_cast<int>(i), j);
    }
  });
}

Var take_diag(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  if (av.rows != av.cols) throw std::invalid_argument("take_diag: square input required");
  Tensor out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) out.at(i, 0) = av.at(i, i);
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < g.rows; ++i) ga.at(i, i) += g.at(i, 0);
  });
}

Var sum_rows(Var a) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  Tensor out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(i, 0) += av.at(i, j);
  return t.push(std::move(out), t.needs_grad(a), [a](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(i, 0);
  });
}

Var add_colvec(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (bv.cols != 1 || bv.rows != av.rows) throw std::invalid_argument("add_colvec: bad shape");
  Tensor out = av;
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out.at(i, j) += bv.at(i, 0);
  return t.push(std::move(out), any_grad({a, b}), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    if (t.needs_grad(a)) axpy(1.0, g, t.grad_at(a.id));
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_at(b.id);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gb.at(i, 0) += g.at(i, j);
    }
  });
}

Var rows_l2_normalize(Var a, double eps) {
  Tape& t = *a.tape;
  const Tensor& av = t.val(a);
  Tensor out(av.rows, av.cols);
  std::vector<double> norms(av.rows);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
    norms[i] = std::max(std::sqrt(s), eps);
    for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j) / norms[i];
  }
  return t.push(std::move(out), t.needs_grad(a), [a, norms](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    const Tensor& y = t.val(Var{&t, self});
    Tensor& ga = t.grad_at(a.id);
    for (int i = 0; i < g.rows; ++i) {
      double gy = 0.0;
      for (int j = 0; j < g.cols; ++j) gy += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols; ++j)
        ga.at(i, j) += (g.at(i, j) - y.at(i, j) * gy) / norms[i];
    }
  });
}

Var gather_rows(Var table, const std::vector<int>& rows) {
  Tape& t = *table.tape;
  const Tensor& tv = t.val(table);
  Tensor out(static_cast<int>(rows.size()), tv.cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= tv.rows) throw std::out_of_range("gather_rows: row out of range");
    for (int j = 0; j < tv.cols; ++j) out.at(static_cast<int>(i), j) = tv.at(rows[i], j);
  }
  return t.push(std::move(out), t.needs_grad(table), [table, rows](Tape& t, int self) {
    const Tensor& g = t.grad_at(self);
    Tensor& gt = t.grad_at(table.id);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < g.cols; ++j) gt.at(rows[i], j) += g.at(static_cast<int>(i), j);
  });
}

}  // namespace dmsrec
