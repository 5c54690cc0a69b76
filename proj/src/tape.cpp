#include "pbpk/tape.hpp"

#include <cmath>

namespace pbpk::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Const: return "const";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Affine: return "affine";
    case Op::RDiv: return "rdiv";
    case Op::MatMul: return "matmul";
    case Op::AddBias: return "add_bias";
    case Op::Row: return "row";
    case Op::Cols: return "cols";
    case Op::Square: return "square";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Relu: return "relu";
    case Op::Step: return "step";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
  }
  return "?";
}

Matrix Var::value() const {
  if (is_constant()) return Matrix::Constant(1, 1, constant_);
  return tape_->value(*this);
}

double Var::scalar() const {
  if (is_constant()) return constant_;
  const Matrix& v = tape_->value(*this);
  if (v.size() != 1) throw std::logic_error("Var::scalar on a non-scalar node");
  return v(0, 0);
}

Var Tape::variable(Matrix value) {
  Var v = push(Op::Leaf, std::move(value), -1);
  leaves_.push_back(v.index());
  return v;
}

Var Tape::constant(Matrix value) { return push(Op::Const, std::move(value), -1); }

Var Tape::push(Op op, Matrix value, int a, int b, double p0, double p1) {
  nodes_.push_back(Node{op, a, b, p0, p1, std::move(value), Matrix(), false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tape::Node& Tape::node(const Var& v) const {
  if (v.tape() != this || v.index() < 0 || static_cast<std::size_t>(v.index()) >= nodes_.size()) {
    throw std::logic_error("variable does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.index())];
}

void Tape::clear() {
  nodes_.clear();
  leaves_.clear();
}

void Tape::accumulate(int index, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(index)];
  if (!n.touched) {
    n.grad = g;
    n.touched = true;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate_broadcast(int index, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(index)];
  if (n.value.size() == 1 && g.size() != 1) {
    accumulate(index, Matrix::Constant(1, 1, g.sum()));
  } else {
    accumulate(index, g);
  }
}

namespace {

// x (.) y where either operand may be 1x1
Matrix bmul(const Matrix& x, const Matrix& y) {
  if (x.size() == 1 && y.size() != 1) return x(0, 0) * y;
  if (y.size() == 1 && x.size() != 1) return y(0, 0) * x;
  return x.cwiseProduct(y);
}

Matrix bdiv(const Matrix& x, const Matrix& y) {
  if (y.size() == 1 && x.size() != 1) return x / y(0, 0);
  if (x.size() == 1 && y.size() != 1) return (x(0, 0) / y.array()).matrix();
  return x.cwiseQuotient(y);
}

Matrix badd(const Matrix& x, const Matrix& y, double sign) {
  if (x.size() == 1 && y.size() != 1) return (sign * y.array() + x(0, 0)).matrix();
  if (y.size() == 1 && x.size() != 1) return (x.array() + sign * y(0, 0)).matrix();
  return sign > 0 ? Matrix(x + y) : Matrix(x - y);
}

void check_shapes(const Matrix& x, const Matrix& y, const char* what) {
  if (x.size() == 1 || y.size() == 1) return;
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument(std::string("shape mismatch in ") + what);
  }
}

}  // namespace

void Tape::propagate(int index) {
  Node& n = nodes_[static_cast<std::size_t>(index)];
  if (!n.touched) return;
  if (!n.grad.allFinite()) throw NonFiniteGradient(index, op_name(n.op));

  // copies: accumulate() may touch other nodes but never this one
  const Matrix g = n.grad;
  const int a = n.a;
  const int b = n.b;
  auto val = [&](int i) -> const Matrix& { return nodes_[static_cast<std::size_t>(i)].value; };

  switch (n.op) {
    case Op::Leaf:
    case Op::Const:
    case Op::Step:
      break;
    case Op::Add:
      accumulate_broadcast(a, g);
      accumulate_broadcast(b, g);
      break;
    case Op::Sub:
      accumulate_broadcast(a, g);
      accumulate_broadcast(b, -g);
      break;
    case Op::Mul: {
      const Matrix ga = bmul(g, val(b));
      const Matrix gb = bmul(g, val(a));
      accumulate_broadcast(a, ga);
      accumulate_broadcast(b, gb);
      break;
    }
    case Op::Div: {
      const Matrix ga = bdiv(g, val(b));
      // d(a/b)/db = -y/b
      const Matrix gb = -bmul(g, bdiv(n.value, val(b)));
      accumulate_broadcast(a, ga);
      accumulate_broadcast(b, gb);
      break;
    }
    case Op::Affine:
      accumulate(a, n.p0 * g);
      break;
    case Op::RDiv:
      accumulate(a, (-(g.array() * n.value.array() / val(a).array())).matrix());
      break;
    case Op::MatMul:
      accumulate(a, g * val(b).transpose());
      accumulate(b, val(a).transpose() * g);
      break;
    case Op::AddBias:
      accumulate(a, g);
      accumulate(b, g.rowwise().sum());
      break;
    case Op::Row: {
      Node& src = nodes_[static_cast<std::size_t>(a)];
      if (!src.touched) {
        src.grad = Matrix::Zero(src.value.rows(), src.value.cols());
        src.touched = true;
      }
      src.grad.row(static_cast<Eigen::Index>(n.p0)) += g.row(0);
      break;
    }
    case Op::Cols: {
      Node& src = nodes_[static_cast<std::size_t>(a)];
      if (!src.touched) {
        src.grad = Matrix::Zero(src.value.rows(), src.value.cols());
        src.touched = true;
      }
      src.grad.middleCols(static_cast<Eigen::Index>(n.p0), static_cast<Eigen::Index>(n.p1)) += g;
      break;
    }
    case Op::Square:
      accumulate(a, (2.0 * g.array() * val(a).array()).matrix());
      break;
    case Op::Tanh:
      accumulate(a, (g.array() * (1.0 - n.value.array().square())).matrix());
      break;
    case Op::Sigmoid:
      accumulate(a, (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
      break;
    case Op::Sin:
      accumulate(a, (g.array() * val(a).array().cos()).matrix());
      break;
    case Op::Cos:
      accumulate(a, (-(g.array() * val(a).array().sin())).matrix());
      break;
    case Op::Exp:
      accumulate(a, g.cwiseProduct(n.value));
      break;
    case Op::Relu:
      accumulate(a, (g.array() * (val(a).array() > 0.0).cast<double>()).matrix());
      break;
    case Op::Sum:
      accumulate(a, Matrix::Constant(val(a).rows(), val(a).cols(), g(0, 0)));
      break;
    case Op::Mean:
      accumulate(a, Matrix::Constant(val(a).rows(), val(a).cols(), g(0, 0) / static_cast<double>(val(a).size())));
      break;
  }
}

void Tape::backward(const Var& loss) {
  const Node& l = node(loss);
  if (l.value.size() != 1) throw std::invalid_argument("backward: loss must be a scalar node");
  for (auto& n : nodes_) {
    n.touched = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss.index(), Matrix::Constant(1, 1, 1.0));
  for (int i = loss.index(); i >= 0; --i) propagate(i);
}

Matrix Tape::grad(const Var& v) const {
  const Node& n = node(v);
  if (!n.touched) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

std::vector<Matrix> Tape::gradient(const Var& loss) {
  backward(loss);
  std::vector<Matrix> out;
  out.reserve(leaves_.size());
  for (int idx : leaves_) out.push_back(grad(Var(this, idx)));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Tape* common_tape(const Var& a, const Var& b) {
  if (!a.is_constant() && !b.is_constant() && a.tape() != b.tape()) {
    throw std::logic_error("operands live on different tapes");
  }
  return a.is_constant() ? b.tape() : a.tape();
}

Var unary(const Var& x, Op op, Matrix value, double p0 = 0.0, double p1 = 0.0) {
  return x.tape()->push(op, std::move(value), x.index(), -1, p0, p1);
}

}  // namespace

Var affine(const Var& x, double alpha, double beta) {
  if (x.is_constant()) return Var(alpha * x.constant() + beta);
  Matrix v = (alpha * x.tape()->value(x).array() + beta).matrix();
  return unary(x, Op::Affine, std::move(v), alpha, beta);
}

Var operator+(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return Var(a.constant() + b.constant());
  if (a.is_constant()) return affine(b, 1.0, a.constant());
  if (b.is_constant()) return affine(a, 1.0, b.constant());
  Tape* t = common_tape(a, b);
  check_shapes(t->value(a), t->value(b), "add");
  return t->push(Op::Add, badd(t->value(a), t->value(b), 1.0), a.index(), b.index());
}

Var operator-(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return Var(a.constant() - b.constant());
  if (a.is_constant()) return affine(b, -1.0, a.constant());
  if (b.is_constant()) return affine(a, 1.0, -b.constant());
  Tape* t = common_tape(a, b);
  check_shapes(t->value(a), t->value(b), "sub");
  return t->push(Op::Sub, badd(t->value(a), t->value(b), -1.0), a.index(), b.index());
}

Var operator-(const Var& a) {
  if (a.is_constant()) return Var(-a.constant());
  return affine(a, -1.0, 0.0);
}

Var operator*(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return Var(a.constant() * b.constant());
  if (a.is_constant()) return affine(b, a.constant(), 0.0);
  if (b.is_constant()) return affine(a, b.constant(), 0.0);
  Tape* t = common_tape(a, b);
  check_shapes(t->value(a), t->value(b), "mul");
  return t->push(Op::Mul, bmul(t->value(a), t->value(b)), a.index(), b.index());
}

Var operator/(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return Var(a.constant() / b.constant());
  if (b.is_constant()) return affine(a, 1.0 / b.constant(), 0.0);
  if (a.is_constant()) {
    Matrix v = (a.constant() / b.tape()->value(b).array()).matrix();
    return unary(b, Op::RDiv, std::move(v), a.constant());
  }
  Tape* t = common_tape(a, b);
  check_shapes(t->value(a), t->value(b), "div");
  return t->push(Op::Div, bdiv(t->value(a), t->value(b)), a.index(), b.index());
}

Var matmul(const Var& a, const Var& b) {
  if (a.is_constant() || b.is_constant()) throw std::invalid_argument("matmul needs two tape nodes");
  Tape* t = common_tape(a, b);
  const Matrix& va = t->value(a);
  const Matrix& vb = t->value(b);
  if (va.cols() != vb.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix v = va * vb;
  return t->push(Op::MatMul, std::move(v), a.index(), b.index());
}

Var add_bias(const Var& m, const Var& bias) {
  Tape* t = common_tape(m, bias);
  const Matrix& vm = t->value(m);
  const Matrix& vb = t->value(bias);
  if (vb.cols() != 1 || vb.rows() != vm.rows()) throw std::invalid_argument("add_bias: bias shape mismatch");
  Matrix v = vm.colwise() + vb.col(0);
  return t->push(Op::AddBias, std::move(v), m.index(), bias.index());
}

Var row(const Var& m, int r) {
  const Matrix& vm = m.tape()->value(m);
  if (r < 0 || r >= vm.rows()) throw std::out_of_range("row index out of range");
  return unary(m, Op::Row, vm.row(r), r);
}

Var cols(const Var& m, int start, int count) {
  const Matrix& vm = m.tape()->value(m);
  if (start < 0 || count < 0 || start + count > vm.cols()) throw std::out_of_range("column range out of range");
  return unary(m, Op::Cols, vm.middleCols(start, count), start, count);
}

#define PBPK_AD_UNARY(name, OP, expr, scalar_expr)                 \
  Var name(const Var& x) {                                         \
    if (x.is_constant()) {                                         \
      const double c = x.constant();                               \
      return Var(scalar_expr);                                     \
    }                                                              \
    const auto xv = x.tape()->value(x).array();                    \
    return unary(x, Op::OP, Matrix((expr).matrix()));             \
  }

PBPK_AD_UNARY(square, Square, xv.square(), c * c)
PBPK_AD_UNARY(tanh, Tanh, xv.tanh(), std::tanh(c))
PBPK_AD_UNARY(sigmoid, Sigmoid, 1.0 / (1.0 + (-xv).exp()), 1.0 / (1.0 + std::exp(-c)))
PBPK_AD_UNARY(sin, Sin, xv.sin(), std::sin(c))
PBPK_AD_UNARY(cos, Cos, xv.cos(), std::cos(c))
PBPK_AD_UNARY(exp, Exp, xv.exp(), std::exp(c))
PBPK_AD_UNARY(relu, Relu, xv.max(0.0), c > 0.0 ? c : 0.0)
PBPK_AD_UNARY(step, Step, (xv > 0.0).cast<double>(), c > 0.0 ? 1.0 : 0.0)

#undef PBPK_AD_UNARY

Var sum(const Var& x) {
  if (x.is_constant()) return x;
  return unary(x, Op::Sum, Matrix::Constant(1, 1, x.tape()->value(x).sum()));
}

Var mean(const Var& x) {
  if (x.is_constant()) return x;
  return unary(x, Op::Mean, Matrix::Constant(1, 1, x.tape()->value(x).mean()));
}

}  // namespace pbpk::ad
