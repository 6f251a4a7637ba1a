#include "csbayes/autodiff.hpp"

#include "csbayes/error.hpp"

#include <cmath>
#include <string>

namespace csbayes {

namespace {

double softplus_scalar(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::push(Matrix value, Backward backward, Parameter* param) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.backward = std::move(backward);
  n.param = param;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Tape::require_same_shape(Var a, Var b, const char* op) const {
  const auto& x = value(a);
  const auto& y = value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

void Tape::accumulate(Var v, const Matrix& g) { nodes_.at(v.id).grad += g; }

Var Tape::parameter(Parameter& p) { return push(p.value, nullptr, &p); }

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) fail(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
  Matrix out = value(a) * value(b);
  return push(std::move(out), [a, b](Tape& t, const Matrix& up) {
    t.accumulate(a, up * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * up);
  });
}

Var Tape::add_bias(Var a, Var bias) {
  if (value(bias).cols() != 1 || value(bias).rows() != value(a).rows()) {
    fail(ErrorCode::ShapeMismatch, "add_bias: bias must be a column matching rows");
  }
  Matrix out = value(a).colwise() + value(bias).col(0);
  return push(std::move(out), [a, bias](Tape& t, const Matrix& up) {
    t.accumulate(a, up);
    t.accumulate(bias, up.rowwise().sum());
  });
}

Var Tape::relu(Var a) {
  Matrix out = value(a).cwiseMax(0.0);
  return push(std::move(out), [a](Tape& t, const Matrix& up) {
    const Matrix mask = (t.value(a).array() > 0.0).cast<double>();
    t.accumulate(a, up.cwiseProduct(mask));
  });
}

Var Tape::softplus(Var a) {
  Matrix out = value(a).unaryExpr(&softplus_scalar);
  return push(std::move(out), [a](Tape& t, const Matrix& up) {
    t.accumulate(a, up.cwiseProduct(t.value(a).unaryExpr(&sigmoid_scalar)));
  });
}

Var Tape::exp(Var a) {
  Matrix out = value(a).array().exp().matrix();
  const Var self{nodes_.size()};
  return push(std::move(out), [a, self](Tape& t, const Matrix& up) {
    t.accumulate(a, up.cwiseProduct(t.value(self)));
  });
}

Var Tape::log(Var a) {
  Matrix out = value(a).array().log().matrix();
  return push(std::move(out), [a](Tape& t, const Matrix& up) {
    t.accumulate(a, up.cwiseQuotient(t.value(a)));
  });
}

Var Tape::square(Var a) {
  Matrix out = value(a).cwiseAbs2();
  return push(std::move(out), [a](Tape& t, const Matrix& up) {
    t.accumulate(a, 2.0 * up.cwiseProduct(t.value(a)));
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Matrix out = value(a) + value(b);
  return push(std::move(out), [a, b](Tape& t, const Matrix& up) {
    t.accumulate(a, up);
    t.accumulate(b, up);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Matrix out = value(a) - value(b);
  return push(std::move(out), [a, b](Tape& t, const Matrix& up) {
    t.accumulate(a, up);
    t.accumulate(b, -up);
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), [a, b](Tape& t, const Matrix& up) {
    t.accumulate(a, up.cwiseProduct(t.value(b)));
    t.accumulate(b, up.cwiseProduct(t.value(a)));
  });
}

Var Tape::scale(Var a, double c) {
  Matrix out = c * value(a);
  return push(std::move(out), [a, c](Tape& t, const Matrix& up) { t.accumulate(a, c * up); });
}

Var Tape::add_scalar(Var a, double c) {
  Matrix out = value(a).array() + c;
  return push(std::move(out), [a](Tape& t, const Matrix& up) { t.accumulate(a, up); });
}

Var Tape::rows(Var a, Eigen::Index start, Eigen::Index count) {
  const auto& x = value(a);
  if (start < 0 || count < 0 || start + count > x.rows()) fail(ErrorCode::ShapeMismatch, "rows: slice out of range");
  Matrix out = x.middleRows(start, count);
  return push(std::move(out), [a, start, count](Tape& t, const Matrix& up) {
    Matrix g = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    g.middleRows(start, count) = up;
    t.accumulate(a, g);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), [a](Tape& t, const Matrix& up) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), up(0, 0)));
  });
}

Var Tape::custom(std::vector<Var> inputs, Matrix value, Backward backward) {
  for (const auto& v : inputs) {
    if (v.id >= nodes_.size()) fail(ErrorCode::InvalidArgument, "custom: input is not on this tape");
  }
  return push(std::move(value), std::move(backward));
}

void Tape::backward(Var output) {
  if (output.id >= nodes_.size()) fail(ErrorCode::InvalidArgument, "backward: unknown node");
  const auto& out = nodes_[output.id].value;
  if (out.rows() != 1 || out.cols() != 1) {
    fail(ErrorCode::NoScalarOutput, "backward needs a 1x1 output, got " + std::to_string(out.rows()) +
                                        "x" + std::to_string(out.cols()));
  }
  for (auto& n : nodes_) n.grad.setZero();
  nodes_[output.id].grad(0, 0) = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    const Matrix& up = nodes_[i].grad;  // inputs always precede i, so no aliasing
    if (nodes_[i].backward) nodes_[i].backward(*this, up);
    if (nodes_[i].param) nodes_[i].param->grad += up;
  }
}

}  // namespace csbayes
