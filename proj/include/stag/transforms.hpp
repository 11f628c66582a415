#pragma once

#include "stag/types.hpp"

#include <cmath>
#include <numbers>

namespace stag {

/// Truncated orthonormal DCT-II basis: K rows over a length-T time axis.
/// Row k is sqrt(a_k / T) cos(pi (2t + 1) k / 2T) with a_0 = 1, a_k = 2.
template <typename Scalar>
class DctBasisT {
 public:
  DctBasisT(int length, int coefficients) : length_(length), coefficients_(coefficients) {
    if (length < 1) throw ShapeError("DCT length must be positive");
    if (coefficients < 1 || coefficients > length)
      throw ShapeError("DCT coefficient count must lie in [1, length]");
    matrix_.resize(coefficients, length);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int k = 0; k < coefficients; ++k) {
      const Scalar scale = std::sqrt((k == 0 ? Scalar(1) : Scalar(2)) / Scalar(length));
      for (int t = 0; t < length; ++t)
        matrix_(k, t) = scale * std::cos(pi * Scalar(2 * t + 1) * Scalar(k) / Scalar(2 * length));
    }
  }

  [[nodiscard]] int length() const noexcept { return length_; }
  [[nodiscard]] int coefficients() const noexcept { return coefficients_; }
  [[nodiscard]] const MatrixX<Scalar>& matrix() const noexcept { return matrix_; }

 private:
  int length_;
  int coefficients_;
  MatrixX<Scalar> matrix_;
};

using DctBasis = DctBasisT<double>;

/// Extends a time-major series (rows = frames) by repeating its last row.
template <typename Derived>
MatrixX<typename Derived::Scalar> pad_replicate(const Eigen::MatrixBase<Derived>& observed,
                                                int extra) {
  if (observed.rows() < 1) throw ShapeError("pad_replicate: empty series");
  if (extra < 0) throw ShapeError("pad_replicate: negative extension");
  MatrixX<typename Derived::Scalar> out(observed.rows() + extra, observed.cols());
  out.topRows(observed.rows()) = observed;
  out.bottomRows(extra) = observed.row(observed.rows() - 1).replicate(extra, 1);
  return out;
}

/// Projects every column of a length-T series onto the K basis rows.
template <typename Derived>
MatrixX<typename Derived::Scalar> dct_encode(const Eigen::MatrixBase<Derived>& series,
                                             const DctBasisT<typename Derived::Scalar>& basis) {
  if (series.rows() != basis.length())
    throw ShapeError("dct_encode: series length " + std::to_string(series.rows()) +
                     " does not match basis length " + std::to_string(basis.length()));
  return basis.matrix() * series;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> dct_decode(const Eigen::MatrixBase<Derived>& coeffs,
                                             const DctBasisT<typename Derived::Scalar>& basis) {
  if (coeffs.rows() != basis.coefficients())
    throw ShapeError("dct_decode: coefficient rows " + std::to_string(coeffs.rows()) +
                     " do not match basis K " + std::to_string(basis.coefficients()));
  return basis.matrix().transpose() * coeffs;
}

/// dct_encode(pad_replicate(observed, T - T_obs)) without materializing the
/// padded series: the replicated tail collapses onto one basis column sum.
template <typename Derived>
MatrixX<typename Derived::Scalar> dct_encode_padded(
    const Eigen::MatrixBase<Derived>& observed, const DctBasisT<typename Derived::Scalar>& basis) {
  const Index t_obs = observed.rows();
  if (t_obs < 1 || t_obs > basis.length()) throw ShapeError("dct_encode_padded: bad length");
  const auto& b = basis.matrix();
  MatrixX<typename Derived::Scalar> out = b.leftCols(t_obs) * observed;
  const Index tail = basis.length() - t_obs;
  if (tail > 0) {
    auto tail_sum = b.rightCols(tail).rowwise().sum();
    out.noalias() += tail_sum * observed.row(t_obs - 1);
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> normalize(const Eigen::MatrixBase<Derived>& data,
                                            typename Derived::Scalar factor) {
  if (!(factor > 0)) throw ShapeError("normalize: factor must be positive");
  return data * factor;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> denormalize(const Eigen::MatrixBase<Derived>& data,
                                              typename Derived::Scalar factor) {
  if (!(factor > 0)) throw ShapeError("denormalize: factor must be positive");
  return data / factor;
}

}  // namespace stag
