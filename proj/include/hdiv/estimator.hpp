#pragma once

#include <memory>
#include <optional>

#include "hdiv/lasso.hpp"
#include "hdiv/regularized_matrices.hpp"

namespace hdiv {

/// IV Lasso and its desparsified correction for one dataset.
///
///   beta_hat = P Z'Y/n - (P Z'X/n - I) beta_tilde,   P = Theta_m_hat M_hat' Theta_hat
struct EstimateBundle {
    Vector beta_tilde;   // p, IV Lasso
    Vector beta_hat;     // p, desparsified
    Vector first_term;   // P Z'Y/n
    Matrix correction;   // P Z'X/n - I, p x p
    Matrix projection;   // P, p x q
    Vector residuals;    // Y - X beta_tilde
    Eigen::Index n = 0;
    std::shared_ptr<const RegularizedMatrices> matrices;
};

/// Terms of sqrt(n)(beta_hat - beta0) = noise_term - delta.
struct DecompositionDiag {
    Vector delta;        // sqrt(n) correction (beta_tilde - beta0)
    Vector noise_term;   // P Z'U / sqrt(n)
    double identity_residual = 0.0;  // ||sqrt(n)(beta_hat - beta0) - noise_term + delta||_inf
};

/// Gram form of the IV Lasso objective
///   (Z'Y/n - M_hat b)' Theta (Z'Y/n - M_hat b) + 2 lambda ||b||_1
/// with Theta replaced by its PSD part theta_root^2:
///   Q = M_hat' theta_root^2 M_hat,  c = M_hat' theta_root^2 Z'Y/n.
QuadraticLassoProblem iv_lasso_problem(const Vector& zty_over_n, const Matrix& theta_root,
                                       const Matrix& m_hat, double lambda);

LassoFit fit_iv_lasso(const IVDataset& data, const PrecisionEstimate& theta,
                      const CrossMomentEstimate& m, double lambda, const SolverOptions& options,
                      const std::optional<Vector>& warm_start = std::nullopt);

/// Same as above, reusing the square root stored with the structural inverse.
LassoFit fit_iv_lasso(const IVDataset& data, const RegularizedMatrices& matrices, double lambda,
                      const SolverOptions& options,
                      const std::optional<Vector>& warm_start = std::nullopt);

EstimateBundle desparsify(const IVDataset& data, const Vector& beta_tilde,
                          std::shared_ptr<const RegularizedMatrices> matrices);

/// Simulation-only: needs the true parameter and structural errors.
DecompositionDiag decompose(const EstimateBundle& bundle, const IVDataset& data,
                            const Vector& beta_true, const Vector& u_true);

/// 1 / lambda_min(M_hat' sym(Theta_hat) M_hat). Throws NumericalError when the
/// smallest eigenvalue is not positive (identification lost).
double omega2_hat(const PrecisionEstimate& theta, const CrossMomentEstimate& m);

/// 1 / lambda_min(M' Sigma^{-1} M) for population matrices.
double omega2_population(const Matrix& m, const Matrix& sigma);

}  // namespace hdiv
