#pragma once

#include <string>
#include <vector>

#include "autodiff.hpp"
#include "session_graph.hpp"

namespace dmsrec {

// Gated session-graph network: one item-embedding table, GRU-style gated
// propagation over a_in/a_out, attention readout against the last item.
struct BackboneParams {
  int d = 100;
  int n_items = 0;
  int steps = 1;

  Tensor embedding;              // n_items x d, row i <-> item id i+1
  Tensor w_in, w_out;            // d x d
  Tensor b_in, b_out;            // 1 x d
  Tensor w_z, w_r, w_h;          // 2d x d, gate inputs from propagated messages
  Tensor u_z, u_r, u_h;          // d x d, gate inputs from previous state
  Tensor b_z, b_r, b_h;          // 1 x d
  Tensor att_w1, att_w2;         // d x d
  Tensor att_q, att_c;           // 1 x d
  Tensor w3;                     // 2d x d, maps [h_last, s_g] to the session space

  void init(int n_items_, int d_, int steps_, Rng& rng);
  std::vector<std::pair<std::string, Tensor*>> named();
  bool all_finite() const;
};

// Tape handles for one training/eval step.
struct BackboneVars {
  Var embedding;
  Var w_in, w_out, b_in, b_out;
  Var w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;
  Var att_w1, att_w2, att_q, att_c;
  Var w3;
};

BackboneVars lift(Tape& t, BackboneParams& p, bool needs_grad);

// Structural intent (1 x d) for one session graph.
Var backbone_forward(Tape& t, const SessionGraph& g, const BackboneVars& p, int steps);

// Scores over the whole catalog: s_vector * embedding^T (1 x n_items,
// column j <-> item id j+1).
Var item_scores(Var s_vector, const BackboneVars& p);

// Frozen forward pass for extraction/evaluation outside any training step.
std::vector<double> frozen_scores(BackboneParams& p, const std::vector<int>& items);

}  // namespace dmsrec
