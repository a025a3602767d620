#pragma once

#include <optional>

#include "hdiv/model.hpp"

namespace hdiv {

/// min_beta  beta'Q beta - 2 c'beta + 2 lambda sum_j w_j |beta_j|
///
/// A regression Lasso ||b - A beta||^2 / n + 2 lambda ||beta||_1 maps to
/// Q = A'A / n, c = A'b / n (see gram_form).
struct QuadraticLassoProblem {
    Matrix q;
    Vector c;
    double lambda = 0.0;
    Vector weights;  // empty means all ones

    Eigen::Index dim() const { return c.size(); }
    double penalty(Eigen::Index j) const;
};

struct LassoFit {
    Vector coefficients;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int sweeps_used = 0;
    bool converged = false;
};

/// sign(z) * max(|z| - t, 0); |z| == t maps to 0.
double soft_threshold(double z, double t);

QuadraticLassoProblem gram_form(const Matrix& design, const Vector& response, double lambda);

/// Throws DataError on shape mismatch, asymmetry beyond 1e-12 relative,
/// negative diagonal, negative lambda or negative weights.
void validate_problem(const QuadraticLassoProblem& prob);

double lasso_objective(const QuadraticLassoProblem& prob, const Vector& beta);

/// Largest subgradient-condition violation over coordinates:
///   beta_j != 0 : |g_j + penalty_j sign(beta_j)|
///   beta_j == 0 : max(|g_j| - penalty_j, 0)
/// with g = Q beta - c.
double check_kkt(const QuadraticLassoProblem& prob, const Vector& beta);

/// Smallest lambda (with unit weights) for which beta = 0 is optimal.
double lambda_max(const QuadraticLassoProblem& prob);

/// Cyclic coordinate descent in ascending index order. Each full sweep is
/// followed by a few active-set sweeps and Newton steps restricted to the
/// current sign orthant; a step that would flip a sign stops at zero for that
/// coordinate. Every step is non-increasing in the objective.
///
/// Converged means max coordinate change < tol and kkt_residual < 10 tol.
/// Coordinates with Q_jj = 0 are pinned to 0 when |c_j| <= penalty_j;
/// otherwise the objective is unbounded below and NumericalError is thrown.
/// Non-convergence is reported through LassoFit::converged.
LassoFit solve_quadratic_lasso(const QuadraticLassoProblem& prob,
                               const std::optional<Vector>& warm_start,
                               const SolverOptions& options);

}  // namespace hdiv
