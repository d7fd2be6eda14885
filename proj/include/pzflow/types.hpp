#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCore>

namespace pzflow {

using Index = Eigen::Index;

template <typename Scalar> using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar> using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Matrix23 = Eigen::Matrix<Scalar, 2, 3>;
template <typename Scalar> using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
template <typename Scalar> using SparseMatrix = Eigen::SparseMatrix<Scalar>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;
using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;
using Mat23 = Matrix23<double>;
using VecX = VectorX<double>;
using Points = Points2<double>;
using SpMat = SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Voigt storage of a symmetric 2D strain: (e11, e22, 2 e12).
template <typename Derived>
Vector3<typename Derived::Scalar> to_voigt_strain(const Eigen::MatrixBase<Derived>& e) {
  return {e(0, 0), e(1, 1), e(0, 1) + e(1, 0)};
}

/// Voigt storage of a symmetric 2D stress: (s11, s22, s12).
template <typename Derived>
Vector3<typename Derived::Scalar> to_voigt_stress(const Eigen::MatrixBase<Derived>& s) {
  return {s(0, 0), s(1, 1), 0.5 * (s(0, 1) + s(1, 0))};
}

template <typename Derived>
Matrix2<typename Derived::Scalar> from_voigt_stress(const Eigen::MatrixBase<Derived>& s) {
  Matrix2<typename Derived::Scalar> m;
  m << s(0), s(2), s(2), s(1);
  return m;
}

template <typename Derived>
Matrix2<typename Derived::Scalar> sym(const Eigen::MatrixBase<Derived>& g) {
  return 0.5 * (g + g.transpose());
}

/// Index pairs (i, j) of the Voigt strain modes 11, 22, 12.
inline constexpr int kVoigtI[3] = {0, 1, 0};
inline constexpr int kVoigtJ[3] = {0, 1, 1};

}  // namespace pzflow
