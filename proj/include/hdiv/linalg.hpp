#pragma once

#include "hdiv/model.hpp"

namespace hdiv {

/// (A + A') / 2
Matrix symmetrize(const Matrix& a);

struct PsdRoot {
    Matrix root;
    Eigen::Index floored = 0;  // eigenvalues raised to the floor
};

/// S = V diag(max(eig, floor))^{1/2} V' from the eigendecomposition of the
/// symmetrized input. S is symmetric PSD; S*S reproduces (A + A')/2 whenever
/// no eigenvalue was floored.
PsdRoot psd_root(const Matrix& a, double floor);
Matrix symmetric_psd_sqrt(const Matrix& a, double floor);

/// Smallest eigenvalue of the symmetrized input.
double min_eigenvalue(const Matrix& a);

/// Inverse of a symmetric positive definite matrix. Throws NumericalError if
/// the matrix is not positive definite or its condition number exceeds
/// max_condition.
Matrix spd_inverse(const Matrix& a, double max_condition = 1e12);

}  // namespace hdiv
