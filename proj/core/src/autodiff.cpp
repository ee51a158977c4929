#include "fluxcube/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fluxcube::autodiff {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("autodiff ") + op + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Tape::clear() { nodes_.clear(); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node Tape::make(Op op, Var a, Var b) const {
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return n;
}

Var Tape::leaf(const Matrix& value) {
  Node n;
  n.op = Op::leaf;
  n.requires_grad = true;
  n.value = value;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::constant;
  n.requires_grad = false;
  n.value = std::move(value);
  return push(std::move(n));
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Node n = make(Op::add, a, b);
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Node n = make(Op::sub, a, b);
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Node n = make(Op::mul, a, b);
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n = make(Op::scale, a);
  n.scalar = s;
  n.value = s * value(a);
  return push(std::move(n));
}

Var Tape::add_scalar(Var a, double s) {
  Node n = make(Op::add_scalar, a);
  n.value = value(a).array() + s;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw std::invalid_argument("autodiff matmul: inner dimension mismatch");
  Node n = make(Op::matmul, a, b);
  n.value.noalias() = value(a) * value(b);
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n = make(Op::transpose, a);
  n.value = value(a).transpose();
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n = make(Op::tanh, a);
  n.value = value(a).array().tanh();
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n = make(Op::relu, a);
  n.value = value(a).cwiseMax(0.0);
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n = make(Op::exp, a);
  n.value = value(a).array().exp();
  return push(std::move(n));
}

Var Tape::softplus(Var a) {
  Node n = make(Op::softplus, a);
  n.value = value(a).unaryExpr([](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); });
  return push(std::move(n));
}

Var Tape::sin(Var a) {
  Node n = make(Op::sin, a);
  n.value = value(a).array().sin();
  return push(std::move(n));
}

Var Tape::cos(Var a) {
  Node n = make(Op::cos, a);
  n.value = value(a).array().cos();
  return push(std::move(n));
}

Var Tape::square(Var a) {
  Node n = make(Op::square, a);
  n.value = value(a).array().square();
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n = make(Op::sum, a);
  n.value = Matrix::Constant(1, 1, value(a).sum());
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  if (value(a).size() == 0) throw std::invalid_argument("autodiff mean: empty input");
  Node n = make(Op::mean, a);
  n.value = Matrix::Constant(1, 1, value(a).mean());
  return push(std::move(n));
}

Var Tape::reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != value(a).size()) throw std::invalid_argument("autodiff reshape: size mismatch");
  Node n = make(Op::reshape, a);
  n.value = Eigen::Map<const Matrix>(value(a).data(), rows, cols);
  return push(std::move(n));
}

Var Tape::select(const Matrix& cond, Var a, Var b) {
  require_same_shape(value(a), value(b), "select");
  require_same_shape(cond, value(a), "select");
  Node n = make(Op::select, a, b);
  n.value = (cond.array() != 0.0).select(value(a), value(b));
  n.aux = cond;
  return push(std::move(n));
}

Var Tape::rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > value(a).rows()) throw std::invalid_argument("autodiff rows: out of range");
  Node n = make(Op::rows, a);
  n.start = start;
  n.value = value(a).middleRows(start, count);
  return push(std::move(n));
}

Var Tape::cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > value(a).cols()) throw std::invalid_argument("autodiff cols: out of range");
  Node n = make(Op::cols, a);
  n.start = start;
  n.value = value(a).middleCols(start, count);
  return push(std::move(n));
}

Var Tape::stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("autodiff stack_rows: no parts");
  Eigen::Index total = 0;
  const Eigen::Index cols = value(parts[0]).cols();
  Node n;
  n.op = Op::stack_rows;
  n.requires_grad = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw std::invalid_argument("autodiff stack_rows: column mismatch");
    total += value(p).rows();
    n.requires_grad = n.requires_grad || needs(p.id);
    n.index.push_back(static_cast<Eigen::Index>(p.id));
  }
  n.value.resize(total, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    n.value.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<Eigen::Index> index) {
  const Matrix& src = value(a);
  Node n = make(Op::gather_rows, a);
  n.value.resize(static_cast<Eigen::Index>(index.size()), src.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= src.rows()) throw std::invalid_argument("autodiff gather_rows: index out of range");
    n.value.row(static_cast<Eigen::Index>(r)) = src.row(index[r]);
  }
  n.index = std::move(index);
  return push(std::move(n));
}

Var Tape::add_row(Var m, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(m).cols()) {
    throw std::invalid_argument("autodiff add_row: row shape mismatch");
  }
  Node n = make(Op::add_row, m, row);
  n.value = value(m).rowwise() + value(row).row(0);
  return push(std::move(n));
}

Var Tape::mul_row(Var m, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(m).cols()) {
    throw std::invalid_argument("autodiff mul_row: row shape mismatch");
  }
  Node n = make(Op::mul_row, m, row);
  n.value = value(m).array().rowwise() * value(row).row(0).array();
  return push(std::move(n));
}

Matrix& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(std::uint32_t id, const Matrix& g) {
  if (!needs(id)) return;
  grad_slot(id) += g;
}

void Tape::backward(Var loss) {
  if (value(loss).rows() != 1 || value(loss).cols() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  grad_slot(loss.id) = Matrix::Constant(1, 1, 1.0);

  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    // Inputs always precede this node, so writing their gradients never touches g.
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;
      case Op::add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::sub:
        accumulate(n.a, g);
        if (needs(n.b)) grad_slot(n.b) -= g;
        break;
      case Op::mul:
        if (needs(n.a)) grad_slot(n.a) += g.cwiseProduct(nodes_[n.b].value);
        if (needs(n.b)) grad_slot(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::scale:
        if (needs(n.a)) grad_slot(n.a) += n.scalar * g;
        break;
      case Op::add_scalar:
        accumulate(n.a, g);
        break;
      case Op::matmul:
        if (needs(n.a)) grad_slot(n.a).noalias() += g * nodes_[n.b].value.transpose();
        if (needs(n.b)) grad_slot(n.b).noalias() += nodes_[n.a].value.transpose() * g;
        break;
      case Op::transpose:
        if (needs(n.a)) grad_slot(n.a) += g.transpose();
        break;
      case Op::tanh:
        if (needs(n.a)) grad_slot(n.a).array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::relu:
        if (needs(n.a)) grad_slot(n.a).array() += (nodes_[n.a].value.array() > 0.0).select(g.array(), 0.0);
        break;
      case Op::exp:
        if (needs(n.a)) grad_slot(n.a).array() += g.array() * n.value.array();
        break;
      case Op::softplus:
        if (needs(n.a)) grad_slot(n.a).array() += g.array() * nodes_[n.a].value.unaryExpr(&sigmoid).array();
        break;
      case Op::sin:
        if (needs(n.a)) grad_slot(n.a).array() += g.array() * nodes_[n.a].value.array().cos();
        break;
      case Op::cos:
        if (needs(n.a)) grad_slot(n.a).array() -= g.array() * nodes_[n.a].value.array().sin();
        break;
      case Op::square:
        if (needs(n.a)) grad_slot(n.a).array() += 2.0 * g.array() * nodes_[n.a].value.array();
        break;
      case Op::sum:
        if (needs(n.a)) grad_slot(n.a).array() += g(0, 0);
        break;
      case Op::mean:
        if (needs(n.a)) grad_slot(n.a).array() += g(0, 0) / static_cast<double>(nodes_[n.a].value.size());
        break;
      case Op::reshape:
        if (needs(n.a)) {
          const Matrix& src = nodes_[n.a].value;
          grad_slot(n.a) += Eigen::Map<const Matrix>(g.data(), src.rows(), src.cols());
        }
        break;
      case Op::select:
        if (needs(n.a)) grad_slot(n.a).array() += (n.aux.array() != 0.0).select(g.array(), 0.0);
        if (needs(n.b)) grad_slot(n.b).array() += (n.aux.array() != 0.0).select(0.0, g.array());
        break;
      case Op::rows:
        if (needs(n.a)) grad_slot(n.a).middleRows(n.start, g.rows()) += g;
        break;
      case Op::cols:
        if (needs(n.a)) grad_slot(n.a).middleCols(n.start, g.cols()) += g;
        break;
      case Op::stack_rows: {
        Eigen::Index r = 0;
        for (Eigen::Index part : n.index) {
          const auto pid = static_cast<std::uint32_t>(part);
          const Eigen::Index h = nodes_[pid].value.rows();
          if (needs(pid)) grad_slot(pid) += g.middleRows(r, h);
          r += h;
        }
        break;
      }
      case Op::gather_rows:
        if (needs(n.a)) {
          Matrix& ga = grad_slot(n.a);
          for (std::size_t r = 0; r < n.index.size(); ++r) ga.row(n.index[r]) += g.row(static_cast<Eigen::Index>(r));
        }
        break;
      case Op::add_row:
        accumulate(n.a, g);
        if (needs(n.b)) grad_slot(n.b) += g.colwise().sum();
        break;
      case Op::mul_row:
        if (needs(n.a)) grad_slot(n.a).array() += g.array().rowwise() * nodes_[n.b].value.row(0).array();
        if (needs(n.b)) grad_slot(n.b) += g.cwiseProduct(nodes_[n.a].value).colwise().sum();
        break;
    }
  }
}

}  // namespace fluxcube::autodiff
