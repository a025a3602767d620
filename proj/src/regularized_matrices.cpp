#include "hdiv/regularized_matrices.hpp"

#include <cmath>
#include <string>

#include "hdiv/lasso.hpp"
#include "hdiv/linalg.hpp"
#include "hdiv/parallel.hpp"

namespace hdiv {

namespace {

std::vector<Eigen::Index> all_but(Eigen::Index d, Eigen::Index j) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(d > 0 ? d - 1 : 0));
    for (Eigen::Index k = 0; k < d; ++k) {
        if (k != j) idx.push_back(k);
    }
    return idx;
}

// ||G v - e_j||_inf
double unit_residual(const Matrix& gram, const Vector& v, Eigen::Index j) {
    Vector r = gram * v;
    r(j) -= 1.0;
    return r.cwiseAbs().maxCoeff();
}

}  // namespace

NodewiseInverse nodewise_inverse(const Matrix& gram, double lambda, const SolverOptions& options,
                                 unsigned threads) {
    const auto d = gram.rows();
    if (gram.cols() != d) throw DataError("nodewise_inverse: Gram matrix is not square");
    if (!(lambda >= 0.0)) throw DataError("nodewise_inverse: lambda must be non-negative");

    NodewiseInverse out;
    out.inverse = Matrix::Zero(d, d);
    out.tau_sq = Vector::Zero(d);
    out.gamma.assign(static_cast<std::size_t>(d), Vector());
    out.certificates.assign(static_cast<std::size_t>(d), RowCertificate{});

    parallel_for(static_cast<std::size_t>(d), threads, [&](std::size_t node) {
        const auto j = static_cast<Eigen::Index>(node);
        const auto rest = all_but(d, j);
        Vector gamma;
        if (!rest.empty()) {
            QuadraticLassoProblem prob;
            prob.q = gram(rest, rest);
            prob.c = gram(rest, j);
            prob.lambda = lambda;
            const LassoFit fit = solve_quadratic_lasso(prob, std::nullopt, options);
            gamma = fit.coefficients;
        }
        Vector big_gamma = Vector::Zero(d);
        big_gamma(j) = 1.0;
        for (std::size_t k = 0; k < rest.size(); ++k) big_gamma(rest[k]) = -gamma(k);

        const double tau_sq =
            big_gamma.dot(gram * big_gamma) + lambda * gamma.cwiseAbs().sum();
        if (!(tau_sq > 0.0) || !std::isfinite(tau_sq)) {
            throw NumericalError("degenerate nodewise fit at index " + std::to_string(j + 1) +
                                 ": tau^2 = " + std::to_string(tau_sq));
        }
        const Vector row = big_gamma / tau_sq;
        out.inverse.row(j) = row.transpose();
        out.tau_sq(j) = tau_sq;
        out.gamma[node] = std::move(gamma);
        out.certificates[node] = RowCertificate{unit_residual(gram, row, j), lambda / tau_sq};
    });
    return out;
}

PrecisionEstimate estimate_precision_nodewise(const Matrix& z, double lambda_node,
                                              const SolverOptions& options, unsigned threads) {
    if (z.rows() < 2) throw DataError("precision estimate needs at least 2 rows");
    Matrix sigma = z.transpose() * z / static_cast<double>(z.rows());
    sigma = symmetrize(sigma);
    NodewiseInverse inv = nodewise_inverse(sigma, lambda_node, options, threads);
    PrecisionEstimate out;
    out.theta_hat = std::move(inv.inverse);
    out.tau_sq = std::move(inv.tau_sq);
    out.gamma_hat = std::move(inv.gamma);
    out.certificates = std::move(inv.certificates);
    out.lambda = lambda_node;
    return out;
}

CrossMomentEstimate threshold_cross_moment(const Matrix& z, const Matrix& x, double c0) {
    if (z.rows() != x.rows()) throw DataError("threshold_cross_moment: row count mismatch");
    if (!(c0 >= 0.0)) throw DataError("threshold_cross_moment: c0 must be non-negative");
    const double n = static_cast<double>(z.rows());
    const double q = static_cast<double>(z.cols());
    CrossMomentEstimate out;
    out.m_tilde = z.transpose() * x / n;
    out.threshold = c0 * std::sqrt(std::log(q) / n);
    out.m_hat = Matrix::Zero(out.m_tilde.rows(), out.m_tilde.cols());
    for (Eigen::Index k = 0; k < out.m_tilde.cols(); ++k) {
        for (Eigen::Index j = 0; j < out.m_tilde.rows(); ++j) {
            const double v = out.m_tilde(j, k);
            if (std::abs(v) >= out.threshold) {
                out.m_hat(j, k) = v;
                ++out.kept_count;
            }
        }
    }
    return out;
}

namespace {

void fill_structural_certificates(StructuralInverseEstimate& est, const Matrix& theta,
                                  const Matrix& m_hat) {
    const Matrix gram_sym = symmetrize(m_hat.transpose() * symmetrize(theta) * m_hat);
    const Matrix gram_raw = m_hat.transpose() * theta * m_hat;
    for (Eigen::Index j = 0; j < est.theta_m_hat.rows(); ++j) {
        const Vector row = est.theta_m_hat.row(j).transpose();
        auto& cert = est.certificates[static_cast<std::size_t>(j)];
        cert.observed = unit_residual(est.gram, row, j);
        cert.observed_symmetric = unit_residual(gram_sym, row, j);
        cert.observed_raw = unit_residual(gram_raw, row, j);
    }
}

}  // namespace

StructuralInverseEstimate estimate_structural_inverse(const PrecisionEstimate& theta,
                                                      const CrossMomentEstimate& m,
                                                      double lambda_node_m,
                                                      const SolverOptions& options,
                                                      unsigned threads) {
    const auto q = theta.theta_hat.rows();
    if (theta.theta_hat.cols() != q || m.m_hat.rows() != q) {
        throw DataError("estimate_structural_inverse: dimension mismatch");
    }
    const PsdRoot root = psd_root(theta.theta_hat, kSqrtFloor);
    const Matrix b = root.root * m.m_hat;
    const Matrix gram = symmetrize(b.transpose() * b);

    NodewiseInverse inv = nodewise_inverse(gram, lambda_node_m, options, threads);
    StructuralInverseEstimate out;
    out.theta_m_hat = std::move(inv.inverse);
    out.tau_tilde_sq = std::move(inv.tau_sq);
    out.gamma_tilde = std::move(inv.gamma);
    out.theta_root = root.root;
    out.gram = gram;
    out.floored_eigenvalues = root.floored;
    out.lambda = lambda_node_m;
    out.certificates.resize(inv.certificates.size());
    for (std::size_t j = 0; j < inv.certificates.size(); ++j) {
        out.certificates[j].bound = inv.certificates[j].bound;
    }
    fill_structural_certificates(out, theta.theta_hat, m.m_hat);
    return out;
}

RegularizedMatrices build_regularized_matrices(const IVDataset& data, const TuningConfig& config,
                                               unsigned threads) {
    validate_tuning(config);
    RegularizedMatrices out;
    out.precision = estimate_precision_nodewise(data.z, config.lambda_node, config.solver(), threads);
    out.cross_moment = threshold_cross_moment(data.z, data.x, config.c0);
    out.structural_inverse = estimate_structural_inverse(out.precision, out.cross_moment,
                                                         config.lambda_node_m, config.solver(),
                                                         threads);
    assert_certificates(out);
    return out;
}

RegularizedMatrices exact_inverses(const Matrix& z, const Matrix& x) {
    const auto n = z.rows();
    const auto q = z.cols();
    const auto p = x.cols();
    if (x.rows() != n) throw DataError("exact_inverses: row count mismatch");
    if (!(n > q && q >= p)) throw DataError("exact_inverses requires n > q >= p");

    RegularizedMatrices out;
    const Matrix sigma = symmetrize(z.transpose() * z / static_cast<double>(n));
    auto& prec = out.precision;
    prec.theta_hat = spd_inverse(sigma);
    prec.exact = true;
    prec.tau_sq = prec.theta_hat.diagonal().cwiseInverse();
    prec.gamma_hat.resize(static_cast<std::size_t>(q));
    prec.certificates.resize(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < q; ++j) {
        const auto rest = all_but(q, j);
        prec.gamma_hat[static_cast<std::size_t>(j)] =
            -prec.theta_hat(j, rest).transpose() * prec.tau_sq(j);
        prec.certificates[static_cast<std::size_t>(j)].observed =
            unit_residual(sigma, prec.theta_hat.row(j).transpose(), j);
    }

    out.cross_moment = threshold_cross_moment(z, x, 0.0);

    auto& sinv = out.structural_inverse;
    const Matrix& m = out.cross_moment.m_tilde;
    sinv.theta_root = symmetric_psd_sqrt(prec.theta_hat, kSqrtFloor);
    sinv.gram = symmetrize(m.transpose() * prec.theta_hat * m);
    sinv.theta_m_hat = spd_inverse(sinv.gram);
    sinv.exact = true;
    sinv.tau_tilde_sq = sinv.theta_m_hat.diagonal().cwiseInverse();
    sinv.gamma_tilde.resize(static_cast<std::size_t>(p));
    sinv.certificates.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto rest = all_but(p, j);
        sinv.gamma_tilde[static_cast<std::size_t>(j)] =
            -sinv.theta_m_hat(j, rest).transpose() * sinv.tau_tilde_sq(j);
    }
    fill_structural_certificates(sinv, prec.theta_hat, m);
    return out;
}

void assert_certificates(const RegularizedMatrices& matrices) {
    const auto& prec = matrices.precision.certificates;
    for (std::size_t j = 0; j < prec.size(); ++j) {
        if (prec[j].observed > prec[j].bound + kCertificateSlack) {
            throw NumericalError("precision certificate violated at row " +
                                 std::to_string(j + 1));
        }
    }
    const auto& sinv = matrices.structural_inverse.certificates;
    for (std::size_t j = 0; j < sinv.size(); ++j) {
        if (sinv[j].observed > sinv[j].bound + kCertificateSlack) {
            throw NumericalError("structural inverse certificate violated at row " +
                                 std::to_string(j + 1));
        }
    }
}

}  // namespace hdiv
