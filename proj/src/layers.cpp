#include "stag/layers.hpp"

#include <cmath>

namespace stag::nn {

ad::Matrix xavier(Index rows, Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  ad::Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

Linear::Linear(const std::string& name, Index in, Index out, Rng& rng)
    : weight_(name + ".weight", xavier(in, out, rng)),
      bias_(name + ".bias", ad::Matrix::Zero(1, out)) {}

Var Linear::operator()(Tape& tape, Var x) {
  return ad::add_row(ad::matmul(x, tape.parameter(weight_)), tape.parameter(bias_));
}

void Linear::zero() {
  weight_.value.setZero();
  bias_.value.setZero();
}

void Linear::collect(ParameterList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Mlp2::Mlp2(const std::string& name, Index in, Index hidden, Index out, bool final_activation,
           Rng& rng)
    : first_(name + ".0", in, hidden, rng),
      last_(name + ".1", hidden, out, rng),
      final_activation_(final_activation) {}

Var Mlp2::operator()(Tape& tape, Var x) {
  Var h = ad::leaky_relu(first_(tape, x));
  Var y = last_(tape, h);
  return final_activation_ ? ad::leaky_relu(y) : y;
}

void Mlp2::collect(ParameterList& out) {
  first_.collect(out);
  last_.collect(out);
}

Index parameter_count(const ParameterList& params) {
  Index n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace stag::nn
