#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace dmsrec {

class Tape;

// Handle into a Tape node. Cheap to copy; valid until the tape is destroyed.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

// Reverse-mode autodiff over Tensor-valued expressions. One tape per
// training step; nodes are created in topological order, backward() walks
// them in reverse. Single-threaded by construction.
class Tape {
 public:
  Var leaf(Tensor value, bool needs_grad = false);

  const Tensor& val(Var x) const { return nodes_[x.id].value; }
  const Tensor& grad(Var x) const { return nodes_[x.id].grad; }
  bool needs_grad(Var x) const { return nodes_[x.id].needs_grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1.
  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }

  // Op plumbing: registers a node. back receives the tape and the node's own
  // id, reads grad_at(self) and accumulates into its inputs' grads.
  Var push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back);
  Tensor& grad_at(int id) { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, int)> back;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// --- primitive ops ---

Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);        // same shape
Var add_rowvec(Var a, Var b); // b is 1 x cols, broadcast over rows of a
Var sub(Var a, Var b);
Var mul(Var a, Var b);        // elementwise
Var scale(Var a, double c);
Var rep_rows(Var a, int n);   // tile a 1 x c row n times
Var concat_cols(Var a, Var b);
Var transpose_v(Var a);
Var sigmoid(Var a);
Var tanh_v(Var a);
Var relu(Var a);
Var log_v(Var a);             // caller guarantees positive input
Var sqrt_v(Var a);            // caller guarantees positive input
Var clamp(Var a, double lo, double hi);  // zero gradient outside (lo, hi)
Var softmax_row(Var a);
Var log_softmax_row(Var a);
Var logsumexp_row(Var a);     // n x m -> n x 1
Var sum_all(Var a);           // -> 1 x 1
Var detach(Var a);            // stops gradient flow
Var gather_rows(Var table, const std::vector<int>& rows);
Var exp_v(Var a);
Var stack_rows(const std::vector<Var>& rows);  // k rows of 1 x c -> k x c
Var take_diag(Var a);         // n x n -> n x 1
Var sum_rows(Var a);          // n x m -> n x 1
Var add_colvec(Var a, Var b); // b is rows x 1, broadcast over columns of a
Var rows_l2_normalize(Var a, double eps = 1e-12);

// --- composites ---

inline Var mean_all(Var a) {
  double n = static_cast<double>(a.tape->val(a).size());
  return scale(sum_all(a), 1.0 / n);
}

inline Var neg(Var a) { return scale(a, -1.0); }

inline double scalar(Var a) { return a.tape->val(a).v.at(0); }

}  // namespace dmsrec
