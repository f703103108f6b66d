#ifndef PRIDE_TRANSFORM_HPP
#define PRIDE_TRANSFORM_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pride/rng.hpp"

namespace pride {

using Index = Eigen::Index;

constexpr bool is_power_of_two(Index n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

constexpr Index next_power_of_two(Index n) noexcept {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

// Unnormalized butterflies over a contiguous buffer of power-of-two length.
template <typename Scalar>
void hadamard_butterflies(Scalar* v, Index n) {
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const Scalar a = v[j];
        const Scalar b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

}  // namespace detail

/// Orthonormal fast Walsh-Hadamard transform, in place.
///
/// Computes H v with H_ij = (-1)^popcount(i & j) / sqrt(n). H is symmetric
/// and orthogonal, so applying the transform twice returns the input.
/// Throws std::invalid_argument unless the length is a power of two.
template <typename Derived>
void fwht_in_place(Eigen::MatrixBase<Derived>& v) {
  static_assert(Derived::IsVectorAtCompileTime, "fwht_in_place expects a vector");
  using Scalar = typename Derived::Scalar;
  const Index n = v.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fwht: length must be a power of two");
  if constexpr (Derived::InnerStrideAtCompileTime == 1) {
    detail::hadamard_butterflies(v.derived().data(), n);
  } else {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tmp = v;
    detail::hadamard_butterflies(tmp.data(), n);
    v = tmp;
  }
  v *= Scalar(1) / std::sqrt(Scalar(n));
}

template <typename Derived>
void fwht_in_place(Eigen::MatrixBase<Derived>&& v) {
  fwht_in_place(v);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> fwht(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out = v;
  fwht_in_place(out);
  return out;
}

/// Subsampled randomized Hadamard transform Pi (input_dim x output_dim).
///
///   Pi = sqrt(padded_dim / output_dim) * (R H D)^T restricted to the first
///   input_dim rows,
///
/// with D a diagonal of random signs, H the orthonormal Hadamard matrix of
/// size padded_dim and R a row selector drawn without replacement. Every
/// entry has magnitude 1/sqrt(output_dim), so each row of Pi has unit norm
/// and the l2-sensitivity of x -> x Pi to a single coordinate is one.
///
/// Inputs whose width is not a power of two are zero padded.
/// Immutable after construction.
class SrhtProjection {
 public:
  SrhtProjection(Index input_dim, Index output_dim, std::uint64_t seed)
      : input_dim_(input_dim),
        padded_dim_(next_power_of_two(input_dim)),
        output_dim_(output_dim),
        seed_(seed) {
    if (output_dim < 1 || input_dim < 1 || output_dim > input_dim) {
      throw std::invalid_argument("srht: need 1 <= output_dim <= input_dim");
    }
    Engine eng(seed);
    std::bernoulli_distribution coin(0.5);
    sign_flips_.resize(padded_dim_);
    for (Index i = 0; i < padded_dim_; ++i) sign_flips_[i] = coin(eng) ? 1.0 : -1.0;

    std::vector<Index> rows(static_cast<std::size_t>(padded_dim_));
    std::iota(rows.begin(), rows.end(), Index{0});
    // Partial Fisher-Yates: the first output_dim entries are a uniform sample.
    for (Index i = 0; i < output_dim_; ++i) {
      std::uniform_int_distribution<Index> pick(i, padded_dim_ - 1);
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(eng))]);
    }
    rows.resize(static_cast<std::size_t>(output_dim_));
    std::sort(rows.begin(), rows.end());
    selected_rows_ = std::move(rows);
  }

  Index input_dim() const noexcept { return input_dim_; }
  Index padded_dim() const noexcept { return padded_dim_; }
  Index output_dim() const noexcept { return output_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Eigen::VectorXd& sign_flips() const noexcept { return sign_flips_; }
  const std::vector<Index>& selected_rows() const noexcept { return selected_rows_; }

  double scale() const noexcept {
    return std::sqrt(static_cast<double>(padded_dim_) / static_cast<double>(output_dim_));
  }

  /// X Pi for an n x input_dim matrix, one fast transform per row.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> apply(
      const Eigen::MatrixBase<Derived>& X) const {
    using Scalar = typename Derived::Scalar;
    if (X.cols() != input_dim_) throw std::invalid_argument("srht_apply: column count != input_dim");
    const Index n = X.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, output_dim_);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> buf(padded_dim_);
    const Scalar s = static_cast<Scalar>(scale());
    for (Index i = 0; i < n; ++i) {
      buf.setZero();
      buf.head(input_dim_) = X.row(i).transpose().cwiseProduct(sign_flips_.head(input_dim_).template cast<Scalar>());
      fwht_in_place(buf);
      for (Index c = 0; c < output_dim_; ++c) out(i, c) = s * buf(selected_rows_[static_cast<std::size_t>(c)]);
    }
    return out;
  }

  /// Explicit input_dim x output_dim matrix. O(input_dim * output_dim); meant
  /// for diagnostics and tests.
  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd pi(input_dim_, output_dim_);
    const double entry = 1.0 / std::sqrt(static_cast<double>(output_dim_));
    for (Index j = 0; j < input_dim_; ++j) {
      for (Index c = 0; c < output_dim_; ++c) {
        const auto r = static_cast<unsigned long long>(selected_rows_[static_cast<std::size_t>(c)]);
        const int parity = __builtin_popcountll(r & static_cast<unsigned long long>(j)) & 1;
        pi(j, c) = (parity ? -entry : entry) * sign_flips_(j);
      }
    }
    return pi;
  }

 private:
  Index input_dim_;
  Index padded_dim_;
  Index output_dim_;
  std::uint64_t seed_;
  Eigen::VectorXd sign_flips_;
  std::vector<Index> selected_rows_;
};

template <typename Derived>
auto srht_apply(const SrhtProjection& proj, const Eigen::MatrixBase<Derived>& X) {
  return proj.apply(X);
}

}  // namespace pride

#endif  // PRIDE_TRANSFORM_HPP
