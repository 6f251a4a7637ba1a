#pragma once

#include "csbayes/linalg.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace csbayes {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so the node list is already topologically sorted; backward walks it
/// in reverse. Batched data is laid out one sample per column.
class Tape {
 public:
  /// Receives the gradient of the output w.r.t. the node value and must add
  /// contributions into the inputs' gradients through Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& upstream)>;

  Var parameter(Parameter& p);
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  /// a + bias broadcast over columns (bias is a column vector).
  Var add_bias(Var a, Var bias);
  Var affine(Var weight, Var input, Var bias) { return add_bias(matmul(weight, input), bias); }

  Var relu(Var a);
  Var softplus(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var square(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var rows(Var a, Eigen::Index start, Eigen::Index count);
  Var sum(Var a);

  /// Node with a caller-supplied value and backward rule.
  Var custom(std::vector<Var> inputs, Matrix value, Backward backward);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void accumulate(Var v, const Matrix& g);

  /// Seeds d(output)/d(output) = 1 and propagates to every node; parameter
  /// gradients are added into Parameter::grad. Throws NoScalarOutput unless
  /// output is 1x1.
  void backward(Var output);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
  };

  Var push(Matrix value, Backward backward, Parameter* param = nullptr);
  void require_same_shape(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace csbayes
