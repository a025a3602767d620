#include "hdiv/linalg.hpp"

#include <cmath>

namespace hdiv {

Matrix symmetrize(const Matrix& a) {
    if (a.rows() != a.cols()) throw DataError("symmetrize: matrix is not square");
    return 0.5 * (a + a.transpose());
}

PsdRoot psd_root(const Matrix& a, double floor) {
    if (!(floor >= 0.0)) throw DataError("psd_root: floor must be non-negative");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a));
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    Vector values = eig.eigenvalues();
    PsdRoot out;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < floor) {
            values(i) = floor;
            ++out.floored;
        }
        values(i) = std::sqrt(values(i));
    }
    const Matrix& v = eig.eigenvectors();
    out.root = v * values.asDiagonal() * v.transpose();
    out.root = symmetrize(out.root);
    return out;
}

Matrix symmetric_psd_sqrt(const Matrix& a, double floor) { return psd_root(a, floor).root; }

double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return eig.eigenvalues()(0);
}

Matrix spd_inverse(const Matrix& a, double max_condition) {
    const Matrix sym = symmetrize(a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    if (!(lo > 0.0) || hi / lo > max_condition) {
        throw NumericalError("singular matrix: condition number exceeds limit");
    }
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) throw NumericalError("singular matrix: Cholesky failed");
    return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

}  // namespace hdiv
