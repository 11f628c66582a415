#pragma once

// Minimal reverse-mode differentiation over dense double matrices. A Tape
// records every operation of one forward pass; backward() walks it in
// reverse and accumulates gradients into the Parameters it touched.

#include "stag/types.hpp"

#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace stag::ad {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) { zero_grad(); }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  [[nodiscard]] Index size() const noexcept { return value.size(); }
};

class Tape;

class Var {
 public:
  Var() = default;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] int id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
  friend class Tape;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  explicit Tape(bool record_gradients = true) : record_gradients_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);
  /// Records an op output. `back` receives the node id and must push the
  /// node's gradient into its inputs; it is dropped when no input needs grad.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward back);
  Var record(Matrix value, std::span<const Var> inputs, Backward back);

  void backward(Var loss);

  [[nodiscard]] const Matrix& value(int id) const { return nodes_[id].value; }
  [[nodiscard]] const Matrix& grad_of(int id) const { return nodes_[id].grad; }
  /// Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(int id);
  [[nodiscard]] bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  [[nodiscard]] bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  [[nodiscard]] bool recording() const noexcept { return record_gradients_; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward back;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  bool record_gradients_;
  std::deque<Node> nodes_;
};

// Linear algebra
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row(Var a, Var row);  // broadcasts a 1 x C row over every row of a
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var transpose(Var a);

// Activations. σ across the project is the leaky rectifier below.
inline constexpr double kLeakySlope = 0.1;
Var leaky_relu(Var a, double slope = kLeakySlope);

// Shape manipulation
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var reshape(Var a, Index rows, Index cols);  // column-major reinterpretation
/// Views the storage of `a` as a column-major (d0, d1, d2) tensor and returns
/// the (d0, d2, d1) tensor as a (d0 * d2) x d1 matrix.
Var swap_last_axes(Var a, Index d0, Index d1, Index d2);
Var gather_rows(Var a, const std::vector<Index>& rows);
/// Mean of the rows of `a` sharing a group id; output has `groups` rows.
Var group_mean_rows(Var a, const std::vector<Index>& group_of_row, Index groups);

// Reductions / losses
Var sum(Var a);
Var mean_squared_error(Var pred, Var target);
/// Mean Euclidean norm of consecutive 3-column groups of (pred - target).
Var mean_euclidean_error(Var pred, Var target);

}  // namespace stag::ad
