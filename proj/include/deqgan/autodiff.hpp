#pragma once

#include "deqgan/types.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace deqgan::ad {

using deqgan::Mat;
using deqgan::Vec;

/// Reverse-mode gradients keyed by parameter name, one entry per
/// parameter registered on the tape, shapes matching the parameters.
using GradientMap = std::map<std::string, Mat>;

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,      // Hadamard
  kDiv,      // elementwise
  kMatMul,
  kAddCol,   // matrix + column vector broadcast over columns
  kTanh,
  kExp,
  kLog,
  kSigmoid,
  kSoftplus,
  kAbs,
  kHuber,    // elementwise Huber value, delta in scalar payload
  kNeg,
  kPowI,     // integer power, exponent in int payload
  kScale,    // constant * matrix
  kAddS,     // matrix + constant scalar
  kSum,      // -> 1x1
  kMean,     // -> 1x1
  kDivScalar,  // matrix / (1x1 node)
  kRow,        // single row slice, index in int payload
  kVStack,     // stack 2 or 3 operands by rows
};

class Tape;

/// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Mat& value() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct Node {
  Mat value;
  Op op = Op::kLeaf;
  std::array<int, 3> args = {-1, -1, -1};
  int nargs = 0;
  int iaux = 0;
  double saux = 0.0;
  bool is_param = false;
  std::string name;  // parameters only
};

/// Append-only reverse-mode computation graph over dense matrices.
/// Operands always precede results, so append order is a topological
/// order and a backward sweep touches each node exactly once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(const Mat& value, std::string name);
  Var constant(Mat value);
  Var constant(double value) { return constant(Mat::Constant(1, 1, value)); }

  /// d(loss)/d(p) for every registered parameter; parameters not
  /// reachable from `loss` get zero gradients of matching shape.
  GradientMap backward(Var loss) const;

  const Node& node(int id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  Var emit(Op op, Mat value, std::initializer_list<Var> args, int iaux = 0,
           double saux = 0.0);

 private:
  std::vector<Node> nodes_;
};

inline const Mat& Var::value() const { return tape_->node(id_).value; }

// Elementwise / structural operations. Binary elementwise ops require
// identical shapes; `matmul` requires inner dimensions to agree.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var matmul(Var a, Var b);
Var add_col(Var a, Var col);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var abs(Var a);
Var huber(Var a, double delta = 1.0);
Var neg(Var a);
Var powi(Var a, int exponent);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var sum(Var a);
Var mean(Var a);
Var div_scalar(Var a, Var scalar);
Var row(Var a, int r);
Var vstack(Var a, Var b);
Var vstack(Var a, Var b, Var c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace deqgan::ad
