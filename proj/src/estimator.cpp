#include "hdiv/estimator.hpp"

#include <cmath>

#include "hdiv/linalg.hpp"

namespace hdiv {

QuadraticLassoProblem iv_lasso_problem(const Vector& zty_over_n, const Matrix& theta_root,
                                       const Matrix& m_hat, double lambda) {
    if (theta_root.rows() != m_hat.rows() || zty_over_n.size() != m_hat.rows()) {
        throw DataError("iv_lasso_problem: dimension mismatch");
    }
    const Matrix b = theta_root * m_hat;
    QuadraticLassoProblem prob;
    prob.q = symmetrize(b.transpose() * b);
    prob.c = b.transpose() * (theta_root * zty_over_n);
    prob.lambda = lambda;
    return prob;
}

LassoFit fit_iv_lasso(const IVDataset& data, const PrecisionEstimate& theta,
                      const CrossMomentEstimate& m, double lambda, const SolverOptions& options,
                      const std::optional<Vector>& warm_start) {
    const Vector zty = data.z.transpose() * data.y / static_cast<double>(data.n());
    const Matrix root = symmetric_psd_sqrt(theta.theta_hat, kSqrtFloor);
    return solve_quadratic_lasso(iv_lasso_problem(zty, root, m.m_hat, lambda), warm_start,
                                 options);
}

LassoFit fit_iv_lasso(const IVDataset& data, const RegularizedMatrices& matrices, double lambda,
                      const SolverOptions& options, const std::optional<Vector>& warm_start) {
    const Vector zty = data.z.transpose() * data.y / static_cast<double>(data.n());
    return solve_quadratic_lasso(
        iv_lasso_problem(zty, matrices.structural_inverse.theta_root,
                         matrices.cross_moment.m_hat, lambda),
        warm_start, options);
}

EstimateBundle desparsify(const IVDataset& data, const Vector& beta_tilde,
                          std::shared_ptr<const RegularizedMatrices> matrices) {
    const auto p = data.p();
    const auto& theta = matrices->precision.theta_hat;
    const auto& m_hat = matrices->cross_moment.m_hat;
    const auto& theta_m = matrices->structural_inverse.theta_m_hat;
    if (beta_tilde.size() != p || theta_m.rows() != p || m_hat.cols() != p ||
        theta.rows() != data.q() || m_hat.rows() != data.q()) {
        throw DataError("desparsify: dimension mismatch");
    }
    const double n = static_cast<double>(data.n());

    EstimateBundle out;
    out.n = data.n();
    out.beta_tilde = beta_tilde;
    out.projection = theta_m * (m_hat.transpose() * theta);
    out.first_term = out.projection * (data.z.transpose() * data.y / n);
    out.correction = out.projection * (data.z.transpose() * data.x / n);
    out.correction.diagonal().array() -= 1.0;
    out.beta_hat = out.first_term - out.correction * beta_tilde;
    out.residuals = data.y - data.x * beta_tilde;
    out.matrices = std::move(matrices);
    return out;
}

DecompositionDiag decompose(const EstimateBundle& bundle, const IVDataset& data,
                            const Vector& beta_true, const Vector& u_true) {
    if (beta_true.size() != bundle.beta_hat.size() || u_true.size() != data.n()) {
        throw DataError("decompose: dimension mismatch");
    }
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    DecompositionDiag out;
    out.delta = root_n * (bundle.correction * (bundle.beta_tilde - beta_true));
    out.noise_term = bundle.projection * (data.z.transpose() * u_true) / root_n;
    out.identity_residual =
        (root_n * (bundle.beta_hat - beta_true) - out.noise_term + out.delta).cwiseAbs().maxCoeff();
    return out;
}

namespace {

double inverse_min_eigenvalue(const Matrix& gram) {
    double lo = min_eigenvalue(gram);
    if (lo < 0.0 && lo >= -1e-10) lo = 0.0;
    if (!(lo > 0.0)) {
        throw NumericalError("loss of identification: smallest eigenvalue is not positive");
    }
    return 1.0 / lo;
}

}  // namespace

double omega2_hat(const PrecisionEstimate& theta, const CrossMomentEstimate& m) {
    const Matrix gram = m.m_hat.transpose() * symmetrize(theta.theta_hat) * m.m_hat;
    return inverse_min_eigenvalue(gram);
}

double omega2_population(const Matrix& m, const Matrix& sigma) {
    if (sigma.rows() != m.rows()) throw DataError("omega2_population: dimension mismatch");
    const Eigen::LLT<Matrix> llt(symmetrize(sigma));
    if (llt.info() != Eigen::Success) throw NumericalError("Sigma is not positive definite");
    return inverse_min_eigenvalue(m.transpose() * llt.solve(m));
}

}  // namespace hdiv
