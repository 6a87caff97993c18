#pragma once

#include <Eigen/Dense>

namespace nanopair {

template <class Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <class Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vec2d = Vec2<double>;
using Mat2d = Mat2<double>;
using VecXd = VecX<double>;

/// Index of a normal mode. `plus` is the branch connected to the in-phase
/// (centre-of-mass) motion, `minus` the stretch branch.
enum class Mode { plus = 0, minus = 1 };

inline int index_of(Mode m) { return static_cast<int>(m); }
inline Mode other(Mode m) { return m == Mode::plus ? Mode::minus : Mode::plus; }
inline const char* name_of(Mode m) { return m == Mode::plus ? "plus" : "minus"; }

}  // namespace nanopair
