#include "hdiv/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdiv {

double QuadraticLassoProblem::penalty(Eigen::Index j) const {
    if (weights.size() == 0) return lambda;
    const double w = weights(j);
    if (std::isinf(w)) return std::numeric_limits<double>::infinity();
    return lambda * w;
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

QuadraticLassoProblem gram_form(const Matrix& design, const Vector& response, double lambda) {
    if (design.rows() != response.size()) throw DataError("gram_form: row count mismatch");
    const double n = static_cast<double>(design.rows());
    QuadraticLassoProblem prob;
    prob.q = design.transpose() * design / n;
    prob.c = design.transpose() * response / n;
    prob.lambda = lambda;
    return prob;
}

void validate_problem(const QuadraticLassoProblem& prob) {
    const auto d = prob.dim();
    if (prob.q.rows() != d || prob.q.cols() != d) {
        throw DataError("quadratic Lasso: Q must be " + std::to_string(d) + "x" +
                        std::to_string(d));
    }
    if (prob.weights.size() != 0 && prob.weights.size() != d) {
        throw DataError("quadratic Lasso: weight vector has wrong length");
    }
    if (!(prob.lambda >= 0.0)) throw DataError("quadratic Lasso: lambda must be non-negative");
    if (prob.weights.size() != 0 && (prob.weights.array() < 0.0).any()) {
        throw DataError("quadratic Lasso: weights must be non-negative");
    }
    const double scale = std::max(1.0, prob.q.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < d; ++j) {
        if (prob.q(j, j) < 0.0) {
            throw DataError("quadratic Lasso: negative diagonal at " + std::to_string(j));
        }
        for (Eigen::Index k = j + 1; k < d; ++k) {
            if (std::abs(prob.q(j, k) - prob.q(k, j)) > 1e-12 * scale) {
                throw DataError("quadratic Lasso: Q is not symmetric");
            }
        }
    }
}

double lasso_objective(const QuadraticLassoProblem& prob, const Vector& beta) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta(j) != 0.0) pen += prob.penalty(j) * std::abs(beta(j));
    }
    return beta.dot(prob.q * beta) - 2.0 * prob.c.dot(beta) + 2.0 * pen;
}

namespace {

double kkt_from_gradient(const QuadraticLassoProblem& prob, const Vector& beta,
                         const Vector& grad) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double pen = prob.penalty(j);
        double v;
        if (beta(j) > 0.0) {
            v = std::abs(grad(j) + pen);
        } else if (beta(j) < 0.0) {
            v = std::abs(grad(j) - pen);
        } else {
            v = std::max(std::abs(grad(j)) - pen, 0.0);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

struct CoordinateDescent {
    const QuadraticLassoProblem& prob;
    Vector beta;
    Vector grad;  // Q beta - c, updated incrementally
    std::vector<bool> pinned;

    // One pass over `coords`; returns the largest absolute coordinate change.
    double sweep(const std::vector<Eigen::Index>& coords) {
        double max_change = 0.0;
        for (const auto j : coords) {
            if (pinned[j]) continue;
            const double qjj = prob.q(j, j);
            const double old = beta(j);
            const double updated = soft_threshold(qjj * old - grad(j), prob.penalty(j)) / qjj;
            if (updated != old) {
                const double delta = updated - old;
                grad.noalias() += delta * prob.q.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        return max_change;
    }

    void refresh_gradient() { grad.noalias() = prob.q * beta - prob.c; }

    double objective() const {
        // beta'Q beta - 2c'beta = beta'(grad + c) - 2c'beta
        double pen = 0.0;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (beta(j) != 0.0) pen += prob.penalty(j) * std::abs(beta(j));
        }
        return beta.dot(grad) - prob.c.dot(beta) + 2.0 * pen;
    }

    std::vector<Eigen::Index> active() const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (beta(j) != 0.0) out.push_back(j);
        }
        return out;
    }

    // Newton step restricted to the current orthant: x solves
    // Q_AA x = c_A - pen_A sign(beta_A). Moves from beta towards x and stops at
    // the first sign change, which zeroes that coordinate. On the segment the
    // objective is a convex quadratic minimized at x, so it cannot increase.
    // Returns 1 if x was reached, 0 if a coordinate was dropped, -1 if no step.
    int orthant_step(double current_objective) {
        const auto act = active();
        if (act.empty()) return -1;
        const auto m = static_cast<Eigen::Index>(act.size());
        Matrix qa(m, m);
        Vector rhs(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) qa(a, b) = prob.q(act[a], act[b]);
            const double s = beta(act[a]) > 0.0 ? 1.0 : -1.0;
            rhs(a) = prob.c(act[a]) - prob.penalty(act[a]) * s;
        }
        Vector dir(m);  // beta_A moves along dir for t in [0, t_max]
        double t_max = 1.0;
        Eigen::LDLT<Matrix> ldlt(qa);
        const Vector diag = ldlt.vectorD();
        const bool regular = ldlt.info() == Eigen::Success &&
                             diag.minCoeff() > 1e-10 * std::max(1.0, diag.cwiseAbs().maxCoeff());
        Vector beta_a(m);
        for (Eigen::Index a = 0; a < m; ++a) beta_a(a) = beta(act[a]);
        if (regular) {
            dir = ldlt.solve(rhs) - beta_a;
        } else {
            // Singular Q_AA: Newton step on its range, or, when the residual
            // has a null-space part, descend along that part until a sign flips.
            Eigen::SelfAdjointEigenSolver<Matrix> eig(qa);
            if (eig.info() != Eigen::Success) return -1;
            const Vector& w = eig.eigenvalues();
            const Matrix& v = eig.eigenvectors();
            const double cut = 1e-10 * std::max(1.0, w.cwiseAbs().maxCoeff());
            const Vector coef = v.transpose() * (rhs - qa * beta_a);
            Vector null_part = Vector::Zero(m);
            dir.setZero();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (w(i) > cut) {
                    dir.noalias() += (coef(i) / w(i)) * v.col(i);
                } else {
                    null_part.noalias() += coef(i) * v.col(i);
                }
            }
            if (null_part.norm() > 1e-12 * (1.0 + rhs.norm())) {
                dir = null_part;
                t_max = std::numeric_limits<double>::infinity();
            }
        }
        if (!dir.allFinite()) return -1;
        const Vector x = beta_a + (std::isinf(t_max) ? Vector::Zero(m) : dir);

        double t = t_max;
        Eigen::Index blocking = -1;
        for (Eigen::Index a = 0; a < m; ++a) {
            const double b = beta_a(a);
            const double next = b + dir(a);
            if (!std::isinf(t_max) && next * b > 0.0) continue;
            if (dir(a) * b >= 0.0) continue;
            const double ta = -b / dir(a);
            if (ta < t) {
                t = ta;
                blocking = a;
            }
        }
        if (std::isinf(t)) return -1;
        const Vector saved = beta;
        for (Eigen::Index a = 0; a < m; ++a) {
            beta(act[a]) = (blocking < 0) ? x(a) : beta_a(a) + t * dir(a);
            if ((beta(act[a]) > 0.0) != (saved(act[a]) > 0.0)) beta(act[a]) = 0.0;
        }
        if (blocking >= 0) beta(act[blocking]) = 0.0;
        refresh_gradient();
        if (objective() > current_objective + 1e-12 * (1.0 + std::abs(current_objective))) {
            beta = saved;
            refresh_gradient();
            return -1;
        }
        return blocking < 0 ? 1 : 0;
    }
};

}  // namespace

double check_kkt(const QuadraticLassoProblem& prob, const Vector& beta) {
    if (beta.size() != prob.dim()) throw DataError("check_kkt: dimension mismatch");
    const Vector grad = prob.q * beta - prob.c;
    return kkt_from_gradient(prob, beta, grad);
}

double lambda_max(const QuadraticLassoProblem& prob) {
    return prob.dim() == 0 ? 0.0 : prob.c.cwiseAbs().maxCoeff();
}

LassoFit solve_quadratic_lasso(const QuadraticLassoProblem& prob,
                               const std::optional<Vector>& warm_start,
                               const SolverOptions& options) {
    validate_problem(prob);
    const auto d = prob.dim();
    if (warm_start && warm_start->size() != d) {
        throw DataError("solve_quadratic_lasso: warm start has wrong length");
    }

    CoordinateDescent cd{prob, warm_start ? *warm_start : Vector::Zero(d), Vector(), {}};
    cd.pinned.assign(static_cast<std::size_t>(d), false);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (prob.q(j, j) > 0.0) continue;
        if (std::abs(prob.c(j)) > prob.penalty(j)) {
            throw NumericalError("unbounded coordinate " + std::to_string(j) +
                                 ": Q_jj = 0 and |c_j| exceeds the penalty");
        }
        cd.pinned[j] = true;
        cd.beta(j) = 0.0;
    }
    cd.refresh_gradient();

    std::vector<Eigen::Index> all(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) all[j] = j;

    LassoFit fit;
    double objective = cd.objective();
    int sweeps = 0;
    const auto checked_sweep = [&](const std::vector<Eigen::Index>& coords) {
        const double change = cd.sweep(coords);
        ++sweeps;
        const double next = cd.objective();
        if (next > objective + 1e-9 * (1.0 + std::abs(objective))) {
            throw std::logic_error("coordinate descent increased the objective");
        }
        objective = next;
        return change;
    };

    while (sweeps < options.max_sweeps) {
        const double change = checked_sweep(all);
        cd.refresh_gradient();
        const double kkt = kkt_from_gradient(prob, cd.beta, cd.grad);
        if (change < options.tol && kkt < 10.0 * options.tol) {
            fit.converged = true;
            break;
        }
        // A few active-set passes settle the support, then Newton steps
        // within the orthant finish it.
        auto act = cd.active();
        for (int k = 0; k < 8 && !act.empty() && sweeps < options.max_sweeps; ++k) {
            if (checked_sweep(act) < options.tol) break;
        }
        cd.refresh_gradient();
        objective = cd.objective();
        for (std::size_t k = 0; k <= static_cast<std::size_t>(d); ++k) {
            const int step = cd.orthant_step(objective);
            if (step < 0) break;
            objective = cd.objective();
            if (step == 1) break;
        }
    }

    fit.coefficients = cd.beta;
    fit.objective = lasso_objective(prob, cd.beta);
    fit.kkt_residual = check_kkt(prob, cd.beta);
    fit.sweeps_used = sweeps;
    return fit;
}

}  // namespace hdiv
