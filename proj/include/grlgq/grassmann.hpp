/*
 * Copyright 2026 The grlgq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "grlgq/errors.hpp"

namespace grlgq {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Max-abs deviation of BᵀB from the identity accepted for a basis.
inline constexpr double kOrthonormalityTolerance = 1e-8;

/// Relative threshold on singular values below which a matrix is treated as
/// rank deficient.
inline constexpr double kRankTolerance = 1e-12;

/// Below this value of 1 - cos²θ the ratio θ / sin θ is replaced by its
/// limit 1.
inline constexpr double kSmallAngleTolerance = 1e-12;

/// max |BᵀB - I| for a D×d matrix.
template <typename Derived>
typename Derived::Scalar orthonormality_error(const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  const Index d = basis.cols();
  if (d == 0) return Scalar(0);
  Matrix<Scalar> gram = basis.transpose() * basis;
  gram.diagonal().array() -= Scalar(1);
  return gram.cwiseAbs().maxCoeff();
}

/// A point on the Grassmann manifold G(D, d), stored as a D×d matrix with
/// orthonormal columns. Two Subspace values with different bases may
/// represent the same point; compare them with principal angles.
template <typename Scalar>
class Subspace {
 public:
  using MatrixType = Matrix<Scalar>;

  Subspace() = default;

  /// Takes ownership of an orthonormal basis. Throws NonOrthonormal when the
  /// columns are not orthonormal to kOrthonormalityTolerance.
  explicit Subspace(MatrixType basis) : basis_(std::move(basis)) {
    if (basis_.cols() < 1 || basis_.cols() > basis_.rows()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "subspace needs 1 <= d <= D, got D=" + std::to_string(basis_.rows()) +
                      " d=" + std::to_string(basis_.cols()));
    }
    if (!basis_.allFinite()) {
      throw Error(ErrorCode::NonFinite, "subspace basis has non-finite entries");
    }
    const Scalar err = orthonormality_error(basis_);
    if (!(err <= Scalar(kOrthonormalityTolerance))) {
      throw Error(ErrorCode::NonOrthonormal,
                  "basis deviates from orthonormal by " + std::to_string(double(err)));
    }
  }

  const MatrixType& basis() const noexcept { return basis_; }
  Index ambient_dim() const noexcept { return basis_.rows(); }
  Index dim() const noexcept { return basis_.cols(); }

 private:
  MatrixType basis_;
};

/// Truncated SVD of an image set X ≈ P diag(Λ) Rᵀ keeping d components.
template <typename Scalar>
struct SubspaceWithFactors {
  Subspace<Scalar> subspace;
  Vector<Scalar> singular_values;  // d entries, descending
  Matrix<Scalar> right_factors;    // m×d
};

/// Principal angles and vectors between span(P) and span(W):
/// PᵀW = Q_P cos(Θ) Q_Wᵀ, U = P Q_P, V = W Q_W.
template <typename Scalar>
struct PrincipalDecomposition {
  Vector<Scalar> angles;    // ascending, in [0, π/2]
  Vector<Scalar> cosines;   // descending, in [0, 1]
  Matrix<Scalar> rot_left;  // Q_P
  Matrix<Scalar> rot_right; // Q_W
  Matrix<Scalar> principal_left;   // U
  Matrix<Scalar> principal_right;  // V

  Index dim() const noexcept { return angles.size(); }
};

namespace detail {

template <typename Scalar>
Scalar clamp_unit(Scalar c) {
  return std::clamp(c, Scalar(0), Scalar(1));
}

inline void require_same_shape(Index d1, Index D1, Index d2, Index D2) {
  if (d1 != d2 || D1 != D2) {
    throw Error(ErrorCode::DimensionMismatch,
                "subspaces differ in shape: " + std::to_string(D1) + "x" + std::to_string(d1) +
                    " vs " + std::to_string(D2) + "x" + std::to_string(d2));
  }
}

}  // namespace detail

/// Orthonormal basis of col(M), taken as the left singular vectors of M.
/// Throws RankDeficient when the numerical rank of M is below its column
/// count.
template <typename Derived>
Subspace<typename Derived::Scalar> orthonormalize_columns(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Index k = m.cols();
  if (k < 1 || k > m.rows()) {
    throw Error(ErrorCode::RankDeficient,
                "cannot orthonormalize " + std::to_string(k) + " columns in R^" +
                    std::to_string(m.rows()));
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFinite, "orthonormalize_columns: non-finite input");
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(k - 1) > Scalar(kRankTolerance) * sv(0))) {
    throw Error(ErrorCode::RankDeficient,
                "numerical rank below " + std::to_string(k) + " (sigma_min/sigma_max = " +
                    std::to_string(double(sv(0) > 0 ? sv(k - 1) / sv(0) : 0)) + ")");
  }
  return Subspace<Scalar>(svd.matrixU());
}

/// Subspace of an image set: the leading d left singular vectors of X
/// together with the matching singular values and right singular vectors.
template <typename Derived>
SubspaceWithFactors<typename Derived::Scalar> subspace_from_set(
    const Eigen::MatrixBase<Derived>& x, Index d) {
  using Scalar = typename Derived::Scalar;
  if (d < 1 || d > std::min(x.rows(), x.cols())) {
    throw Error(ErrorCode::RankDeficient,
                "requested d=" + std::to_string(d) + " from a " + std::to_string(x.rows()) + "x" +
                    std::to_string(x.cols()) + " set");
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::NonFinite, "subspace_from_set: non-finite entries");
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(d - 1) > Scalar(kRankTolerance) * sv(0))) {
    throw Error(ErrorCode::RankDeficient,
                "set rank is below d=" + std::to_string(d));
  }
  return SubspaceWithFactors<Scalar>{
      Subspace<Scalar>(svd.matrixU().leftCols(d)),
      sv.head(d),
      svd.matrixV().leftCols(d),
  };
}

template <typename Scalar>
PrincipalDecomposition<Scalar> principal_decomposition(const Subspace<Scalar>& p1,
                                                       const Subspace<Scalar>& p2) {
  detail::require_same_shape(p1.dim(), p1.ambient_dim(), p2.dim(), p2.ambient_dim());
  const Matrix<Scalar> cross = p1.basis().transpose() * p2.basis();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);

  PrincipalDecomposition<Scalar> pd;
  // Singular values are nonnegative, so uₖᵀvₖ = σₖ ≥ 0 needs no sign fix.
  pd.cosines = svd.singularValues().unaryExpr([](Scalar c) { return detail::clamp_unit(c); });
  pd.rot_left = svd.matrixU();
  pd.rot_right = svd.matrixV();
  pd.principal_left = p1.basis() * pd.rot_left;
  pd.principal_right = p2.basis() * pd.rot_right;
  // θₖ = atan2(‖vₖ − σₖuₖ‖, σₖ) keeps full accuracy near 0 where acos loses it.
  pd.angles.resize(pd.cosines.size());
  for (Index k = 0; k < pd.cosines.size(); ++k) {
    const Scalar s =
        (pd.principal_right.col(k) - pd.cosines(k) * pd.principal_left.col(k)).norm();
    pd.angles(k) = std::atan2(s, pd.cosines(k));
    if (k > 0) pd.angles(k) = std::max(pd.angles(k), pd.angles(k - 1));
  }
  return pd;
}

/// Principal angles only, ascending.
template <typename Scalar>
Vector<Scalar> principal_angles(const Subspace<Scalar>& p1, const Subspace<Scalar>& p2) {
  return principal_decomposition(p1, p2).angles;
}

/// Σₖ θₖ²
template <typename Scalar>
Scalar squared_geodesic_distance(const PrincipalDecomposition<Scalar>& pd) {
  return pd.angles.squaredNorm();
}

/// ‖Θ‖₂
template <typename Scalar>
Scalar geodesic_distance(const PrincipalDecomposition<Scalar>& pd) {
  return std::sqrt(squared_geodesic_distance(pd));
}

/// Σₖ λₖ θₖ² for a bare angle vector.
template <typename DerivedA, typename DerivedL>
typename DerivedA::Scalar adaptive_squared_distance(const Eigen::MatrixBase<DerivedA>& angles,
                                                    const Eigen::MatrixBase<DerivedL>& relevance) {
  assert(angles.size() == relevance.size());
  return (relevance.array() * angles.array().square()).sum();
}

template <typename Scalar, typename DerivedL>
Scalar adaptive_squared_distance(const PrincipalDecomposition<Scalar>& pd,
                                 const Eigen::MatrixBase<DerivedL>& relevance) {
  return adaptive_squared_distance(pd.angles, relevance);
}

/// The single principal angle between span{x} and span(W). x must be a unit
/// vector.
template <typename Scalar, typename Derived>
Scalar single_vector_angle(const Eigen::MatrixBase<Derived>& x, const Subspace<Scalar>& w) {
  if (x.size() != w.ambient_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from ambient dimension");
  }
  const Vector<Scalar> coeff = w.basis().transpose() * x;
  return std::atan2((x - w.basis() * coeff).norm(), coeff.norm());
}

/// Diagonal of G: 2 λₖ θₖ / sin θₖ, with the θ → 0 limit 2 λₖ.
template <typename Scalar, typename DerivedL>
Vector<Scalar> g_matrix_diagonal(const PrincipalDecomposition<Scalar>& pd,
                                 const Eigen::MatrixBase<DerivedL>& relevance) {
  assert(pd.dim() == relevance.size());
  Vector<Scalar> g(pd.dim());
  for (Index k = 0; k < pd.dim(); ++k) {
    const Scalar c = pd.cosines(k);
    const Scalar one_minus_c2 = Scalar(1) - c * c;
    const Scalar ratio = one_minus_c2 < Scalar(kSmallAngleTolerance)
                             ? Scalar(1)
                             : pd.angles(k) / std::sin(pd.angles(k));
    g(k) = Scalar(2) * relevance(k) * ratio;
  }
  return g;
}

/// Per-pixel terms uᵢⱼ vᵢⱼ of cos θᵢ = Σⱼ uᵢⱼ vᵢⱼ (index i is zero-based).
template <typename Scalar>
Vector<Scalar> pixel_influence(const PrincipalDecomposition<Scalar>& pd, Index i) {
  if (i < 0 || i >= pd.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "angle index out of range");
  }
  return pd.principal_left.col(i).cwiseProduct(pd.principal_right.col(i));
}

/// M = R Λ⁻¹ Q_P. Row j of M gives the weight of image j in each principal
/// vector, since X M = P Q_P = U.
template <typename Scalar>
Matrix<Scalar> image_contribution(const SubspaceWithFactors<Scalar>& factors,
                                  const Matrix<Scalar>& rot_left) {
  const Index d = factors.singular_values.size();
  if (rot_left.rows() != d || rot_left.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "rotation does not match subspace dimension");
  }
  if (factors.singular_values.minCoeff() < Scalar(kRankTolerance)) {
    throw Error(ErrorCode::SingularFactor, "singular value below 1e-12 in set factorization");
  }
  return factors.right_factors * factors.singular_values.cwiseInverse().asDiagonal() * rot_left;
}

}  // namespace grlgq
