#pragma once

#include <optional>
#include <string>

#include "hdiv/estimator.hpp"

namespace hdiv {

enum class CovarianceMode { heteroscedastic_sandwich, homoscedastic_scaled_lasso };

std::string to_string(CovarianceMode mode);

/// Estimate of Omega, the asymptotic covariance of sqrt(n)(beta_hat - beta0).
struct CovarianceEstimate {
    Matrix omega_hat;
    CovarianceMode mode = CovarianceMode::heteroscedastic_sandwich;
    std::optional<double> sigma_hat_sq;
};

struct ConfidenceInterval {
    Vector target;
    double level = 0.95;
    double center = 0.0;
    double half_width = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool rejected = false;
};

struct ScaledLassoResult {
    double sigma_hat = 0.0;
    Vector beta;
    int iterations = 0;
    bool converged = false;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF (Wichura's AS 241, ~1e-16 relative accuracy).
/// Throws DataError unless 0 < u < 1.
double normal_quantile(double u);

/// Omega_hat = W W' / n with W = P Z' diag(U_hat), P = Theta_m_hat M_hat' Theta_hat.
CovarianceEstimate estimate_covariance_sandwich(const EstimateBundle& bundle, const Matrix& z);

/// Omega_hat = sigma^2 (Theta_m_hat + Theta_m_hat') / 2.
CovarianceEstimate estimate_covariance_homoscedastic(const StructuralInverseEstimate& theta_m,
                                                     double sigma_hat_sq);

inline constexpr double kSigmaFloor = 1e-8;

/// Scaled-Lasso noise level for the IV objective. Alternates
///   beta <- IV Lasso with penalty lambda0 * sigma
///   sigma <- ||Y - X beta|| / sqrt(n)
/// starting from sigma = ||Y|| / sqrt(n), until |sigma_{t+1} - sigma_t| < 1e-6
/// or 100 iterations. Throws NumericalError("degenerate noise estimate") if
/// sigma falls below kSigmaFloor.
ScaledLassoResult scaled_lasso_sigma(const IVDataset& data, const RegularizedMatrices& matrices,
                                     double lambda0, const SolverOptions& options = {});

/// One update of the scaled-Lasso fixed point from a given sigma.
ScaledLassoResult scaled_lasso_step(const IVDataset& data, const RegularizedMatrices& matrices,
                                    double lambda0, double sigma, const SolverOptions& options = {},
                                    const std::optional<Vector>& warm_start = std::nullopt);

/// a'beta_hat +- z_{1 - alpha/2} sqrt(a'Omega a / n), alpha = 1 - level.
ConfidenceInterval confidence_interval(const EstimateBundle& bundle, const CovarianceEstimate& cov,
                                       const Vector& a, double level);

/// Two-sided test of a'beta0 = a'beta_H.
TestResult wald_test(const EstimateBundle& bundle, const CovarianceEstimate& cov, const Vector& a,
                     const Vector& beta_h, double alpha);

/// ||a||_1 / ||a||_2, reported alongside intervals for general targets.
double l1_l2_ratio(const Vector& a);

}  // namespace hdiv
