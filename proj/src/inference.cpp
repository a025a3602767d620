#include "hdiv/inference.hpp"

#include <cmath>

#include "hdiv/linalg.hpp"

namespace hdiv {

std::string to_string(CovarianceMode mode) {
    switch (mode) {
        case CovarianceMode::heteroscedastic_sandwich: return "heteroscedastic_sandwich";
        case CovarianceMode::homoscedastic_scaled_lasso: return "homoscedastic_scaled_lasso";
    }
    return "unknown";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DataError("normal_quantile: argument must lie in (0, 1)");
    const double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

CovarianceEstimate estimate_covariance_sandwich(const EstimateBundle& bundle, const Matrix& z) {
    if (z.rows() != bundle.residuals.size() || z.cols() != bundle.projection.cols()) {
        throw DataError("estimate_covariance_sandwich: dimension mismatch");
    }
    const Matrix w = bundle.projection * (z.transpose() * bundle.residuals.asDiagonal());
    CovarianceEstimate out;
    out.omega_hat = symmetrize(w * w.transpose() / static_cast<double>(z.rows()));
    out.mode = CovarianceMode::heteroscedastic_sandwich;
    return out;
}

CovarianceEstimate estimate_covariance_homoscedastic(const StructuralInverseEstimate& theta_m,
                                                     double sigma_hat_sq) {
    if (!(sigma_hat_sq >= 0.0)) throw DataError("noise variance must be non-negative");
    CovarianceEstimate out;
    out.omega_hat = sigma_hat_sq * symmetrize(theta_m.theta_m_hat);
    out.mode = CovarianceMode::homoscedastic_scaled_lasso;
    out.sigma_hat_sq = sigma_hat_sq;
    return out;
}

namespace {

QuadraticLassoProblem scaled_problem(const IVDataset& data, const RegularizedMatrices& matrices) {
    const Vector zty = data.z.transpose() * data.y / static_cast<double>(data.n());
    return iv_lasso_problem(zty, matrices.structural_inverse.theta_root,
                            matrices.cross_moment.m_hat, 0.0);
}

double residual_sd(const IVDataset& data, const Vector& beta) {
    return (data.y - data.x * beta).norm() / std::sqrt(static_cast<double>(data.n()));
}

}  // namespace

ScaledLassoResult scaled_lasso_step(const IVDataset& data, const RegularizedMatrices& matrices,
                                    double lambda0, double sigma, const SolverOptions& options,
                                    const std::optional<Vector>& warm_start) {
    QuadraticLassoProblem prob = scaled_problem(data, matrices);
    prob.lambda = lambda0 * sigma;
    ScaledLassoResult out;
    out.beta = solve_quadratic_lasso(prob, warm_start, options).coefficients;
    out.sigma_hat = residual_sd(data, out.beta);
    out.iterations = 1;
    return out;
}

ScaledLassoResult scaled_lasso_sigma(const IVDataset& data, const RegularizedMatrices& matrices,
                                     double lambda0, const SolverOptions& options) {
    if (!(lambda0 >= 0.0)) throw DataError("scaled Lasso: lambda0 must be non-negative");
    QuadraticLassoProblem prob = scaled_problem(data, matrices);
    ScaledLassoResult out;
    double sigma = data.y.norm() / std::sqrt(static_cast<double>(data.n()));
    if (sigma < kSigmaFloor) throw NumericalError("degenerate noise estimate");
    std::optional<Vector> warm;
    for (int it = 1; it <= 100; ++it) {
        prob.lambda = lambda0 * sigma;
        const LassoFit fit = solve_quadratic_lasso(prob, warm, options);
        warm = fit.coefficients;
        const double next = residual_sd(data, fit.coefficients);
        if (!(next >= kSigmaFloor)) throw NumericalError("degenerate noise estimate");
        out.beta = fit.coefficients;
        out.sigma_hat = next;
        out.iterations = it;
        if (std::abs(next - sigma) < 1e-6) {
            out.converged = true;
            break;
        }
        sigma = next;
    }
    return out;
}

ConfidenceInterval confidence_interval(const EstimateBundle& bundle, const CovarianceEstimate& cov,
                                       const Vector& a, double level) {
    if (a.size() != bundle.beta_hat.size() || cov.omega_hat.rows() != a.size()) {
        throw DataError("confidence_interval: target has wrong length");
    }
    if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must lie in (0, 1)");
    double var = a.dot(cov.omega_hat * a);
    if (var < -1e-10) throw NumericalError("covariance estimate has negative variance along target");
    var = std::max(var, 0.0);
    const double alpha = 1.0 - level;
    ConfidenceInterval ci;
    ci.target = a;
    ci.level = level;
    ci.center = a.dot(bundle.beta_hat);
    ci.half_width =
        normal_quantile(1.0 - alpha / 2.0) * std::sqrt(var / static_cast<double>(bundle.n));
    ci.lower = ci.center - ci.half_width;
    ci.upper = ci.center + ci.half_width;
    return ci;
}

TestResult wald_test(const EstimateBundle& bundle, const CovarianceEstimate& cov, const Vector& a,
                     const Vector& beta_h, double alpha) {
    if (a.size() != bundle.beta_hat.size() || beta_h.size() != a.size() ||
        cov.omega_hat.rows() != a.size()) {
        throw DataError("wald_test: dimension mismatch");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("test level must lie in (0, 1)");
    const double var = a.dot(cov.omega_hat * a);
    if (!(var > 0.0)) throw NumericalError("zero variance along test direction");
    TestResult out;
    out.statistic = std::sqrt(static_cast<double>(bundle.n)) *
                    std::abs(a.dot(bundle.beta_hat - beta_h)) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(out.statistic / std::sqrt(2.0)));
    out.rejected = out.statistic >= normal_quantile(1.0 - alpha / 2.0);
    return out;
}

double l1_l2_ratio(const Vector& a) {
    const double l2 = a.norm();
    return l2 > 0.0 ? a.lpNorm<1>() / l2 : 0.0;
}

}  // namespace hdiv
