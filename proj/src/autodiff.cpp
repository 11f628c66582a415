#include "stag/autodiff.hpp"

#include <cmath>

namespace stag::ad {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, record_gradients_});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward back) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(back));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward back) {
  bool needs = false;
  if (record_gradients_)
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw std::logic_error("autodiff: mixing variables across tapes");
      needs = needs || nodes_[in.id_].needs_grad;
    }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(back) : Backward{}, nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::logic_error("autodiff: loss from another tape");
  if (loss.value().size() != 1) throw ShapeError("autodiff: backward needs a scalar loss");
  grad(loss.id_).setOnes();
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols())
        n.param->zero_grad();
      n.param->grad += n.grad;
    } else if (n.back) {
      n.back(*this, id);
    }
  }
}

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw ShapeError(std::string("autodiff: ") + what);
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.grad(a.id()).noalias() += g * b.value().transpose();
    if (t.needs_grad(b)) t.grad(b.id()).noalias() += a.value().transpose() * g;
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shapes differ");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.grad(a.id()) += g;
    if (t.needs_grad(b)) t.grad(b.id()) += g;
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shapes differ");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.grad(a.id()) += g;
    if (t.needs_grad(b)) t.grad(b.id()) -= g;
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row expects a matching 1 x C row");
  Tape& t = *a.tape();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return t.record(std::move(out), {a, row}, [a, row](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.grad(a.id()) += g;
    if (t.needs_grad(row)) t.grad(row.id()) += g.colwise().sum();
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.record(a.value() * s, {a}, [a, s](Tape& t, int self) {
    t.grad(a.id()) += s * t.grad_of(self);
  });
}

Var hadamard(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard shapes differ");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.grad(a.id()) += g.cwiseProduct(b.value());
    if (t.needs_grad(b)) t.grad(b.id()) += g.cwiseProduct(a.value());
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().transpose(), {a}, [a](Tape& t, int self) {
    t.grad(a.id()) += t.grad_of(self).transpose();
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return t.record(std::move(out), {a}, [a, slope](Tape& t, int self) {
    const Matrix& x = a.value();
    t.grad(a.id()) +=
        t.grad_of(self).binaryExpr(x, [slope](double g, double v) { return v > 0 ? g : slope * g; });
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  Tape& t = *parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [saved](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Index c = 0;
    for (const Var& p : saved) {
      if (t.needs_grad(p)) t.grad(p.id()) += g.middleCols(c, p.cols());
      c += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  Tape& t = *parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [saved](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Index r = 0;
    for (const Var& p : saved) {
      if (t.needs_grad(p)) t.grad(p.id()) += g.middleRows(r, p.rows());
      r += p.rows();
    }
  });
}

Var slice_rows(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  Tape& t = *a.tape();
  return t.record(a.value().middleRows(start, count), {a}, [a, start, count](Tape& t, int self) {
    t.grad(a.id()).middleRows(start, count) += t.grad_of(self);
  });
}

Var slice_cols(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  Tape& t = *a.tape();
  return t.record(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, int self) {
    t.grad(a.id()).middleCols(start, count) += t.grad_of(self);
  });
}

Var reshape(Var a, Index rows, Index cols) {
  require(rows * cols == a.value().size(), "reshape changes element count");
  Tape& t = *a.tape();
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad(a.id());
    Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
  });
}

Var swap_last_axes(Var a, Index d0, Index d1, Index d2) {
  require(d0 * d1 * d2 == a.value().size(), "swap_last_axes dimensions do not match storage");
  Tape& t = *a.tape();
  Matrix out(d0 * d2, d1);
  const double* src = a.value().data();
  double* dst = out.data();
  // src(i, j, k) at i + d0 (j + d1 k); dst(i, k, j) at i + d0 (k + d2 j)
  for (Index k = 0; k < d2; ++k)
    for (Index j = 0; j < d1; ++j)
      for (Index i = 0; i < d0; ++i) dst[i + d0 * (k + d2 * j)] = src[i + d0 * (j + d1 * k)];
  return t.record(std::move(out), {a}, [a, d0, d1, d2](Tape& t, int self) {
    const double* g = t.grad_of(self).data();
    double* ga = t.grad(a.id()).data();
    for (Index k = 0; k < d2; ++k)
      for (Index j = 0; j < d1; ++j)
        for (Index i = 0; i < d0; ++i) ga[i + d0 * (j + d1 * k)] += g[i + d0 * (k + d2 * j)];
  });
}

Var gather_rows(Var a, const std::vector<Index>& rows) {
  Tape& t = *a.tape();
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows index out of range");
    out.row(i) = a.value().row(rows[i]);
  }
  return t.record(std::move(out), {a}, [a, rows](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad(a.id());
    for (std::size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(i);
  });
}

Var group_mean_rows(Var a, const std::vector<Index>& group_of_row, Index groups) {
  require(static_cast<Index>(group_of_row.size()) == a.rows(), "group ids must cover every row");
  Tape& t = *a.tape();
  std::vector<double> counts(groups, 0.0);
  for (Index gid : group_of_row) {
    require(gid >= 0 && gid < groups, "group id out of range");
    counts[gid] += 1.0;
  }
  Matrix out = Matrix::Zero(groups, a.cols());
  for (Index r = 0; r < a.rows(); ++r) out.row(group_of_row[r]) += a.value().row(r);
  for (Index g = 0; g < groups; ++g)
    if (counts[g] > 0) out.row(g) /= counts[g];
  return t.record(std::move(out), {a}, [a, group_of_row, counts](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    Matrix& ga = t.grad(a.id());
    for (Index r = 0; r < ga.rows(); ++r) {
      const Index gid = group_of_row[r];
      ga.row(r) += g.row(gid) / counts[gid];
    }
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [a](Tape& t, int self) {
    t.grad(a.id()).array() += t.grad_of(self)(0, 0);
  });
}

Var mean_squared_error(Var pred, Var target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse shapes differ");
  Tape& t = *pred.tape();
  const double n = static_cast<double>(pred.value().size());
  Matrix out(1, 1);
  out(0, 0) = (pred.value() - target.value()).squaredNorm() / n;
  return t.record(std::move(out), {pred, target}, [pred, target, n](Tape& t, int self) {
    const double g = t.grad_of(self)(0, 0);
    Matrix d = (2.0 * g / n) * (pred.value() - target.value());
    if (t.needs_grad(pred)) t.grad(pred.id()) += d;
    if (t.needs_grad(target)) t.grad(target.id()) -= d;
  });
}

Var mean_euclidean_error(Var pred, Var target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(),
          "mean_euclidean_error shapes differ");
  require(pred.cols() % 3 == 0, "mean_euclidean_error expects 3-column groups");
  Tape& t = *pred.tape();
  const Matrix diff = pred.value() - target.value();
  const Index groups = diff.cols() / 3;
  const double n = static_cast<double>(diff.rows() * groups);
  Matrix norms(diff.rows(), groups);
  for (Index r = 0; r < diff.rows(); ++r)
    for (Index j = 0; j < groups; ++j) norms(r, j) = diff.row(r).segment(3 * j, 3).norm();
  Matrix out(1, 1);
  out(0, 0) = norms.sum() / n;
  return t.record(std::move(out), {pred, target},
                  [pred, target, diff, norms, n, groups](Tape& t, int self) {
                    const double g = t.grad_of(self)(0, 0) / n;
                    Matrix d = Matrix::Zero(diff.rows(), diff.cols());
                    for (Index r = 0; r < diff.rows(); ++r)
                      for (Index j = 0; j < groups; ++j)
                        if (norms(r, j) > 0)
                          d.row(r).segment(3 * j, 3) = g * diff.row(r).segment(3 * j, 3) / norms(r, j);
                    if (t.needs_grad(pred)) t.grad(pred.id()) += d;
                    if (t.needs_grad(target)) t.grad(target.id()) -= d;
                  });
}

}  // namespace stag::ad
