#pragma once

#include "stag/autodiff.hpp"

#include <random>
#include <string>
#include <vector>

namespace stag::nn {

using ad::Parameter;
using ad::Tape;
using ad::Var;
using Rng = std::mt19937_64;

using ParameterList = std::vector<Parameter*>;

/// Xavier-uniform matrix.
ad::Matrix xavier(Index rows, Index cols, Rng& rng);

/// y = x W + b, x is rows x in.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, Index in, Index out, Rng& rng);

  Var operator()(Tape& tape, Var x);
  void zero();
  void collect(ParameterList& out);

  [[nodiscard]] Index in_dim() const noexcept { return weight_.value.rows(); }
  [[nodiscard]] Index out_dim() const noexcept { return weight_.value.cols(); }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
};

/// Two linear layers; σ follows the first and, when `final_activation`, the
/// second.
class Mlp2 {
 public:
  Mlp2() = default;
  Mlp2(const std::string& name, Index in, Index hidden, Index out, bool final_activation,
       Rng& rng);

  Var operator()(Tape& tape, Var x);
  void collect(ParameterList& out);
  Linear& first() noexcept { return first_; }
  Linear& last() noexcept { return last_; }

 private:
  Linear first_;
  Linear last_;
  bool final_activation_ = true;
};

Index parameter_count(const ParameterList& params);
void zero_grads(const ParameterList& params);

}  // namespace stag::nn
