#pragma once

#include <limits>
#include <vector>

#include "hdiv/model.hpp"

namespace hdiv {

/// Observed approximate-inverse error of one row against its guaranteed bound.
/// Exact inverses report bound = +infinity.
struct RowCertificate {
    double observed = 0.0;
    double bound = std::numeric_limits<double>::infinity();

    double slack() const { return bound - observed; }
};

/// Nodewise inverse of Sigma_hat = Z'Z/n. Row j of theta_hat is
/// Gamma_j / tau_sq(j) with Gamma_j = (1 at j, -gamma_hat[j] elsewhere).
struct PrecisionEstimate {
    Matrix theta_hat;                  // q x q, not symmetric in general
    Vector tau_sq;                     // q
    std::vector<Vector> gamma_hat;     // q vectors of length q-1
    std::vector<RowCertificate> certificates;  // ||Sigma_hat Theta_j - e_j||_inf vs lambda/tau_j^2
    double lambda = 0.0;
    bool exact = false;
};

/// Entrywise hard thresholding of Z'X/n at c0 * sqrt(log(q) / n).
struct CrossMomentEstimate {
    Matrix m_tilde;  // q x p
    Matrix m_hat;    // q x p
    double threshold = 0.0;
    Eigen::Index kept_count = 0;
};

/// Per-row certificates for the structural inverse. `observed` is measured
/// against B'B (the Gram matrix the nodewise regressions minimized);
/// the symmetric and raw variants use M_hat' sym(Theta_hat) M_hat and
/// M_hat' Theta_hat M_hat respectively.
struct StructuralCertificate {
    double observed = 0.0;
    double bound = std::numeric_limits<double>::infinity();
    double observed_symmetric = 0.0;
    double observed_raw = 0.0;

    double slack() const { return bound - observed; }
};

/// Nodewise inverse of B'B with B = Theta_hat^{1/2} M_hat.
struct StructuralInverseEstimate {
    Matrix theta_m_hat;                // p x p
    Vector tau_tilde_sq;               // p
    std::vector<Vector> gamma_tilde;   // p vectors of length p-1
    std::vector<StructuralCertificate> certificates;
    Matrix theta_root;                 // Theta_hat^{1/2}, q x q
    Matrix gram;                       // B'B, p x p
    Eigen::Index floored_eigenvalues = 0;  // in the square root of Theta_hat
    double lambda = 0.0;
    bool exact = false;
};

struct RegularizedMatrices {
    PrecisionEstimate precision;
    CrossMomentEstimate cross_moment;
    StructuralInverseEstimate structural_inverse;
};

/// Slack allowed on the certificate inequalities.
inline constexpr double kCertificateSlack = 1e-8;

/// Eigenvalue floor for the square root of the symmetrized precision estimate.
inline constexpr double kSqrtFloor = 1e-12;

/// Result of nodewise inversion of a symmetric PSD Gram matrix G:
/// for each j, gamma_j minimizes G-form ||A_j - A_{-j} g||^2 + 2 lambda ||g||_1,
/// tau_j^2 = Gamma_j' G Gamma_j + lambda ||gamma_j||_1.
struct NodewiseInverse {
    Matrix inverse;
    Vector tau_sq;
    std::vector<Vector> gamma;
    std::vector<RowCertificate> certificates;  // against G
};

NodewiseInverse nodewise_inverse(const Matrix& gram, double lambda, const SolverOptions& options,
                                 unsigned threads = 1);

PrecisionEstimate estimate_precision_nodewise(const Matrix& z, double lambda_node,
                                              const SolverOptions& options = {},
                                              unsigned threads = 1);

CrossMomentEstimate threshold_cross_moment(const Matrix& z, const Matrix& x, double c0);

StructuralInverseEstimate estimate_structural_inverse(const PrecisionEstimate& theta,
                                                      const CrossMomentEstimate& m,
                                                      double lambda_node_m,
                                                      const SolverOptions& options = {},
                                                      unsigned threads = 1);

/// All three estimates under one tuning configuration.
RegularizedMatrices build_regularized_matrices(const IVDataset& data, const TuningConfig& config,
                                               unsigned threads = 1);

/// Unregularized path: Theta_hat = Sigma_hat^{-1}, M_hat = M_tilde,
/// Theta_m_hat = (M_tilde' Sigma_hat^{-1} M_tilde)^{-1}. Requires n > q >= p
/// and condition numbers below 1e12.
RegularizedMatrices exact_inverses(const Matrix& z, const Matrix& x);

/// Throws NumericalError naming the first row whose certificate is violated
/// beyond kCertificateSlack.
void assert_certificates(const RegularizedMatrices& matrices);

}  // namespace hdiv
