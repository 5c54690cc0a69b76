#pragma once

// Reverse-mode automatic differentiation over matrix-valued nodes.
//
// Every node holds an Eigen matrix. Elementwise binary operations accept two
// operands of the same shape, or one 1x1 operand that broadcasts. A Var with
// no tape is a plain scalar constant; arithmetic between constants folds
// without touching any tape, so parameter structs can mix constants and
// trainable scalars freely.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pbpk::ad {

using Matrix = Eigen::MatrixXd;

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(int node, std::string_view op)
      : std::runtime_error("non-finite adjoint at node " + std::to_string(node) + " (" + std::string(op) + ")"),
        node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

enum class Op {
  Leaf, Const,
  Add, Sub, Mul, Div,
  Affine,       // alpha * x + beta
  RDiv,         // c / x
  MatMul, AddBias, Row, Cols,
  Square, Tanh, Sigmoid, Sin, Cos, Exp, Relu, Step,
  Sum, Mean,
};

std::string_view op_name(Op op);

class Tape;

class Var {
 public:
  Var() = default;
  Var(double constant) : constant_(constant) {}  // NOLINT: implicit by design of the scalar API

  bool is_constant() const { return tape_ == nullptr; }
  double constant() const { return constant_; }
  Tape* tape() const { return tape_; }
  int index() const { return index_; }

  /// Value of a node; a constant reports a 1x1 matrix.
  Matrix value() const;
  /// Value of a scalar node or constant.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  int index_ = -1;
  double constant_ = 0.0;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable leaf. Leaves are reported by gradient() in creation order.
  Var variable(Matrix value);
  Var variable(double value) { return variable(Matrix::Constant(1, 1, value)); }
  Var constant(Matrix value);

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(const Var& v) const { return node(v).value; }

  /// Reverse sweep from a 1x1 node. Each node is visited once, in reverse
  /// creation order. Throws NonFiniteGradient on the first NaN/Inf adjoint.
  void backward(const Var& loss);

  /// Adjoint of any node after backward(); zeros for nodes that do not reach the loss.
  Matrix grad(const Var& v) const;

  /// Adjoints of all leaves, in creation order.
  std::vector<Matrix> gradient(const Var& loss);

  void clear();

  // Node construction, used by the free operator functions below.
  Var push(Op op, Matrix value, int a, int b = -1, double p0 = 0.0, double p1 = 0.0);

 private:
  struct Node {
    Op op;
    int a;
    int b;
    double p0;
    double p1;
    Matrix value;
    Matrix grad;
    bool touched;
  };

  const Node& node(const Var& v) const;
  void accumulate(int index, const Matrix& g);
  void accumulate_broadcast(int index, const Matrix& g);
  void propagate(int index);

  std::vector<Node> nodes_;
  std::vector<int> leaves_;
};

// Arithmetic. At least one operand must carry a tape unless both are constants.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var affine(const Var& x, double alpha, double beta);
Var matmul(const Var& a, const Var& b);
/// Adds a column vector to every column of `m`.
Var add_bias(const Var& m, const Var& bias);
Var row(const Var& m, int r);
Var cols(const Var& m, int start, int count);

Var square(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var sin(const Var& x);
Var cos(const Var& x);
Var exp(const Var& x);
Var relu(const Var& x);
/// Heaviside step (1 where x > 0). Its derivative is taken as zero.
Var step(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace pbpk::ad
