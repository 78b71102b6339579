#include "backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace dmsrec {

void BackboneParams::init(int n_items_, int d_, int steps_, Rng& rng) {
  n_items = n_items_;
  d = d_;
  steps = steps_;
  if (n_items < 1 || d < 1 || steps < 0) throw std::invalid_argument("backbone: bad config");

  embedding = Tensor(n_items, d);
  w_in = Tensor(d, d);
  w_out = Tensor(d, d);
  b_in = Tensor(1, d);
  b_out = Tensor(1, d);
  w_z = Tensor(2 * d, d);
  w_r = Tensor(2 * d, d);
  w_h = Tensor(2 * d, d);
  u_z = Tensor(d, d);
  u_r = Tensor(d, d);
  u_h = Tensor(d, d);
  b_z = Tensor(1, d);
  b_r = Tensor(1, d);
  b_h = Tensor(1, d);
  att_w1 = Tensor(d, d);
  att_w2 = Tensor(d, d);
  att_q = Tensor(1, d);
  att_c = Tensor(1, d);
  w3 = Tensor(2 * d, d);

  double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& [name, t] : named()) {
    (void)name;
    t->fill_uniform(rng, -bound, bound);
  }
}

std::vector<std::pair<std::string, Tensor*>> BackboneParams::named() {
  return {
      {"backbone.embedding", &embedding},
      {"backbone.w_in", &w_in},   {"backbone.b_in", &b_in},
      {"backbone.w_out", &w_out}, {"backbone.b_out", &b_out},
      {"backbone.w_z", &w_z},     {"backbone.u_z", &u_z},     {"backbone.b_z", &b_z},
      {"backbone.w_r", &w_r},     {"backbone.u_r", &u_r},     {"backbone.b_r", &b_r},
      {"backbone.w_h", &w_h},     {"backbone.u_h", &u_h},     {"backbone.b_h", &b_h},
      {"backbone.att_w1", &att_w1}, {"backbone.att_w2", &att_w2},
      {"backbone.att_q", &att_q},   {"backbone.att_c", &att_c},
      {"backbone.w3", &w3},
  };
}

bool BackboneParams::all_finite() const {
  auto& self = const_cast<BackboneParams&>(*this);
  for (auto& [name, t] : self.named()) {
    (void)name;
    if (!t->all_finite()) return false;
  }
  return true;
}

BackboneVars lift(Tape& t, BackboneParams& p, bool needs_grad) {
  BackboneVars v;
  v.embedding = t.leaf(p.embedding, needs_grad);
  v.w_in = t.leaf(p.w_in, needs_grad);
  v.w_out = t.leaf(p.w_out, needs_grad);
  v.b_in = t.leaf(p.b_in, needs_grad);
  v.b_out = t.leaf(p.b_out, needs_grad);
  v.w_z = t.leaf(p.w_z, needs_grad);
  v.w_r = t.leaf(p.w_r, needs_grad);
  v.w_h = t.leaf(p.w_h, needs_grad);
  v.u_z = t.leaf(p.u_z, needs_grad);
  v.u_r = t.leaf(p.u_r, needs_grad);
  v.u_h = t.leaf(p.u_h, needs_grad);
  v.b_z = t.leaf(p.b_z, needs_grad);
  v.b_r = t.leaf(p.b_r, needs_grad);
  v.b_h = t.leaf(p.b_h, needs_grad);
  v.att_w1 = t.leaf(p.att_w1, needs_grad);
  v.att_w2 = t.leaf(p.att_w2, needs_grad);
  v.att_q = t.leaf(p.att_q, needs_grad);
  v.att_c = t.leaf(p.att_c, needs_grad);
  v.w3 = t.leaf(p.w3, needs_grad);
  return v;
}

Var backbone_forward(Tape& t, const SessionGraph& g, const BackboneVars& p, int steps) {
  const int n = g.n();
  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) {
    int id = g.nodes[i];
    if (id < 1 || id > t.val(p.embedding).rows)
      throw std::out_of_range("backbone_forward: item id outside catalog: " + std::to_string(id));
    rows[i] = id - 1;
  }

  Var h = gather_rows(p.embedding, rows);  // n x d
  Var a_in = t.leaf(g.a_in);
  Var a_out = t.leaf(g.a_out);

  for (int step = 0; step < steps; ++step) {
    Var m_in = add_rowvec(matmul(a_in, matmul(h, p.w_in)), p.b_in);
    Var m_out = add_rowvec(matmul(a_out, matmul(h, p.w_out)), p.b_out);
    Var a = concat_cols(m_in, m_out);  // n x 2d
    Var z = sigmoid(add_rowvec(add(matmul(a, p.w_z), matmul(h, p.u_z)), p.b_z));
    Var r = sigmoid(add_rowvec(add(matmul(a, p.w_r), matmul(h, p.u_r)), p.b_r));
    Var hh = tanh_v(add_rowvec(add(matmul(a, p.w_h), matmul(mul(r, h), p.u_h)), p.b_h));
    // h' = (1 - z) * h + z * hh
    h = add(sub(h, mul(z, h)), mul(z, hh));
  }

  Var h_last = gather_rows(h, {g.last_node()});                      // 1 x d
  Var u = sigmoid(add_rowvec(add(rep_rows(matmul(h_last, p.att_w1), n), matmul(h, p.att_w2)),
                             p.att_c));                              // n x d
  Var alpha = matmul_nt(u, p.att_q);                                 // n x 1
  Var s_g = matmul(transpose_v(alpha), h);                           // 1 x d
  return matmul(concat_cols(h_last, s_g), p.w3);                     // 1 x d
}

Var item_scores(Var s_vector, const BackboneVars& p) {
  return matmul_nt(s_vector, p.embedding);
}

std::vector<double> frozen_scores(BackboneParams& p, const std::vector<int>& items) {
  Tape t;
  BackboneVars v = lift(t, p, false);
  SessionGraph g = build_session_graph(items);
  Var s = backbone_forward(t, g, v, p.steps);
  Var scores = item_scores(s, v);
  return t.val(scores).v;
}

}  // namespace dmsrec
