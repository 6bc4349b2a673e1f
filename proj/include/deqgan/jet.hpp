#pragma once

#include "deqgan/autodiff.hpp"

namespace deqgan::ad {

/// A batch of jets: a quantity together with its first and diagonal
/// second derivatives with respect to each input coordinate. Columns
/// index mesh points; rows index vector components of the quantity.
/// Mixed second partials are not tracked (no equation in scope needs
/// them), so d1/d2 have one entry per input dimension.
struct JetBatch {
  Var v;
  std::vector<Var> d1;
  std::vector<Var> d2;

  int dims() const { return static_cast<int>(d1.size()); }
};

/// Seed jets for a batch of input points X (input_dim x m): the value
/// is X itself, d(row j)/d(coord k) = delta_jk, second derivatives zero.
JetBatch lift_input(Tape& tape, const Mat& X);

/// Seed a single coordinate of the input batch as a 1 x m jet:
/// value = X.row(dim), d1[k] = [k == dim], d2 = 0.
JetBatch lift_coordinate(Tape& tape, const Mat& X, int dim);

JetBatch jet_add(const JetBatch& a, const JetBatch& b);
JetBatch jet_sub(const JetBatch& a, const JetBatch& b);
JetBatch jet_mul(const JetBatch& a, const JetBatch& b);
JetBatch jet_tanh(const JetBatch& a);
JetBatch jet_exp(const JetBatch& a);
JetBatch jet_scale(const JetBatch& a, double c);
JetBatch jet_add_scalar(const JetBatch& a, double c);
JetBatch jet_neg(const JetBatch& a);

/// y = W x + b propagated through the jet: derivative components map
/// linearly, so second derivatives of an affine image of a seed stay zero.
JetBatch jet_affine(Var W, Var b, const JetBatch& x);

/// Row slice of a vector-valued jet (one output head).
JetBatch jet_row(const JetBatch& a, int r);

}  // namespace deqgan::ad
