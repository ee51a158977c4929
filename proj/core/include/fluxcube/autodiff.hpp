#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fluxcube::autodiff {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Reverse-mode differentiation over dense matrices.
///
/// Every operation appends a node holding its value; nodes are therefore in
/// topological order by construction and backward() walks them once in
/// reverse. Constants never receive gradients, and gradients are only
/// propagated through nodes that depend on a leaf.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void clear();
  void reserve(std::size_t nodes) { nodes_.reserve(nodes); }
  std::size_t size() const { return nodes_.size(); }

  Var leaf(const Matrix& value);
  Var constant(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  // Gradient of the last backward() target; zero matrix for nodes it does not depend on.
  Matrix grad(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var matmul(Var a, Var b);
  Var transpose(Var a);

  Var tanh(Var a);
  Var relu(Var a);  // subgradient 0 at 0
  Var exp(Var a);
  Var softplus(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var square(Var a);

  Var sum(Var a);
  Var mean(Var a);
  Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);  // column-major reinterpretation
  // cond(r, c) != 0 ? a(r, c) : b(r, c); cond is constant.
  Var select(const Matrix& cond, Var a, Var b);

  Var rows(Var a, Eigen::Index start, Eigen::Index count);
  Var cols(Var a, Eigen::Index start, Eigen::Index count);
  // Vertical concatenation; all parts share a column count.
  Var stack_rows(std::span<const Var> parts);
  // out.row(r) = a.row(index[r]).
  Var gather_rows(Var a, std::vector<Eigen::Index> index);
  // Broadcast a 1 x n row over every row of m.
  Var add_row(Var m, Var row);
  Var mul_row(Var m, Var row);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients. Throws if loss is not 1 x 1.
  void backward(Var loss);

 private:
  enum class Op : std::uint8_t {
    leaf, constant, add, sub, mul, scale, add_scalar, matmul, transpose, tanh, relu, exp, softplus, sin, cos,
    square, sum, mean, reshape, select, rows, cols, stack_rows, gather_rows, add_row, mul_row
  };

  struct Node {
    Op op;
    bool requires_grad;
    std::uint32_t a = UINT32_MAX;
    std::uint32_t b = UINT32_MAX;
    double scalar = 0.0;
    Eigen::Index start = 0;
    Matrix value;
    Matrix grad;
    Matrix aux;                        // select mask
    std::vector<Eigen::Index> index;   // gather rows / stacked part ids
  };

  Var push(Node node);
  Node make(Op op, Var a, Var b = {}) const;
  void accumulate(std::uint32_t id, const Matrix& g);
  Matrix& grad_slot(std::uint32_t id);
  bool needs(std::uint32_t id) const { return id != UINT32_MAX && nodes_[id].requires_grad; }

  std::vector<Node> nodes_;
};

}  // namespace fluxcube::autodiff
