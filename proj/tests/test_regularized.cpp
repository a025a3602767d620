#include <doctest.h>

#include <cmath>

#include "hdiv/linalg.hpp"
#include "hdiv/regularized_matrices.hpp"
#include "support.hpp"

using namespace hdiv;

namespace {

// n x q matrix with Z'Z/n = I exactly.
Matrix orthonormal_design(std::uint64_t seed, Eigen::Index n, Eigen::Index q) {
    Rng rng(seed);
    const Matrix a = test::normal_matrix(rng, n, q);
    Eigen::HouseholderQR<Matrix> qr(a);
    return std::sqrt(static_cast<double>(n)) * Matrix(qr.householderQ()).leftCols(q);
}

Matrix ar1_sample(Rng& rng, Eigen::Index n, Eigen::Index q, double r) {
    Matrix z = test::normal_matrix(rng, n, q);
    for (Eigen::Index j = 1; j < q; ++j) z.col(j) = r * z.col(j - 1) + std::sqrt(1 - r * r) * z.col(j);
    return z;
}

}  // namespace

TEST_CASE("orthonormal instruments give the identity precision") {
    const Matrix z = orthonormal_design(3, 50, 6);
    for (const double lambda : {0.0, 0.1, 1.0}) {
        const auto est = estimate_precision_nodewise(z, lambda);
        CHECK((est.theta_hat - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((est.tau_sq.array() - 1.0).abs().maxCoeff() < 1e-10);
        for (const auto& g : est.gamma_hat) CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("two correlated instruments approach the 2x2 inverse") {
    Rng rng(17);
    const Matrix z = ar1_sample(rng, 100000, 2, 0.5);
    const auto est = estimate_precision_nodewise(z, 1e-10);
    const Matrix s = z.transpose() * z / 100000.0;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    Matrix cofactor(2, 2);
    cofactor << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    CHECK((est.theta_hat - cofactor / det).cwiseAbs().maxCoeff() < 1e-6);
    Matrix population(2, 2);
    population << 4.0 / 3, -2.0 / 3, -2.0 / 3, 4.0 / 3;
    CHECK((est.theta_hat - population).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("nodewise and exact inverses agree for tiny lambda") {
    Rng rng(23);
    const Matrix z = ar1_sample(rng, 2000, 4, 0.4);
    const Matrix x = z.leftCols(3) + 0.5 * test::normal_matrix(rng, 2000, 3);
    const auto nodewise = estimate_precision_nodewise(z, 1e-10);
    const auto exact = exact_inverses(z, x);
    CHECK((nodewise.theta_hat - exact.precision.theta_hat).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("large lambda leaves tau_sq at the diagonal of Sigma_hat") {
    Rng rng(29);
    const Matrix z = ar1_sample(rng, 80, 5, 0.3);
    const Matrix s = z.transpose() * z / 80.0;
    const auto est = estimate_precision_nodewise(z, 10.0);
    for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(est.gamma_hat[j].isZero(0.0));
        CHECK(est.tau_sq(j) == doctest::Approx(s(j, j)).epsilon(1e-14));
    }
}

TEST_CASE("degenerate instrument column is reported by index") {
    Rng rng(31);
    Matrix z = test::normal_matrix(rng, 20, 4);
    z.col(2).setZero();
    CHECK_THROWS_WITH_AS(estimate_precision_nodewise(z, 0.1), doctest::Contains("3"), NumericalError);
}

TEST_CASE("threshold rule examples") {
    // Z'X/n = [[0.9, 0.01], [0.02, 0.8]] with n = 100, q = 2.
    Matrix z = orthonormal_design(41, 100, 2);
    Matrix target(2, 2);
    target << 0.9, 0.01, 0.02, 0.8;
    const Matrix x = z * target;
    const auto m = threshold_cross_moment(z, x, 1.0);
    CHECK(m.threshold == doctest::Approx(std::sqrt(std::log(2.0) / 100.0)));
    CHECK(m.m_hat(0, 0) == doctest::Approx(0.9));
    CHECK(m.m_hat(1, 1) == doctest::Approx(0.8));
    CHECK(m.m_hat(0, 1) == 0.0);
    CHECK(m.m_hat(1, 0) == 0.0);
    CHECK(m.kept_count == 2);

    const auto none = threshold_cross_moment(z, 0.001 * x, 1.0);
    CHECK(none.m_hat.isZero(0.0));
    const auto all = threshold_cross_moment(z, x, 0.0);
    CHECK(all.m_hat == all.m_tilde);
}

TEST_CASE("property: threshold dichotomy and monotone truncation") {
    Rng rng(43);
    const Matrix z = test::normal_matrix(rng, 60, 20);
    const Matrix x = 0.3 * z.leftCols(10) + test::normal_matrix(rng, 60, 10);
    Eigen::Index previous = x.size() + 1;
    for (const double c0 : {0.0, 0.1, 0.25, 0.5, 1.0, 2.0}) {
        const auto m = threshold_cross_moment(z, x, c0);
        for (Eigen::Index i = 0; i < m.m_hat.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.m_hat.cols(); ++j) {
                const double v = m.m_hat(i, j);
                CHECK((v == 0.0 || (v == m.m_tilde(i, j) && std::abs(v) >= m.threshold)));
            }
        }
        CHECK(m.kept_count <= previous);
        previous = m.kept_count;
    }
}

TEST_CASE("symmetric PSD square root examples") {
    CHECK(symmetric_psd_sqrt(Matrix::Identity(3, 3), kSqrtFloor).isApprox(Matrix::Identity(3, 3)));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Matrix s = symmetric_psd_sqrt(d, kSqrtFloor);
    CHECK(s(0, 0) == doctest::Approx(2.0));
    CHECK(s(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(s(0, 1)) < 1e-14);

    Rng rng(47);
    const Matrix g = test::normal_matrix(rng, 12, 8);
    const Matrix a = g.transpose() * g;
    const Matrix r = symmetric_psd_sqrt(a, kSqrtFloor);
    CHECK((r * r - a).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("structural inverse with a single covariate") {
    Rng rng(53);
    const Matrix z = test::normal_matrix(rng, 50, 4);
    const Matrix x = z.col(0) + test::normal_matrix(rng, 50, 1);
    const auto theta = estimate_precision_nodewise(z, 0.05);
    const auto m = threshold_cross_moment(z, x, 0.0);
    const auto si = estimate_structural_inverse(theta, m, 0.1);
    const Matrix b = si.theta_root * m.m_hat;
    CHECK(si.tau_tilde_sq(0) == doctest::Approx(b.col(0).squaredNorm()));
    CHECK(si.theta_m_hat(0, 0) == doctest::Approx(1.0 / b.col(0).squaredNorm()));
}

TEST_CASE("structural inverse approaches the dense inverse as lambda vanishes") {
    Rng rng(59);
    const Matrix z = test::normal_matrix(rng, 400, 5);
    Matrix pi = 0.3 * test::normal_matrix(rng, 5, 3);
    pi.topRows(3) += Matrix::Identity(3, 3);
    const Matrix x = z * pi + 0.5 * test::normal_matrix(rng, 400, 3);
    const auto theta = estimate_precision_nodewise(z, 1e-3);
    const auto m = threshold_cross_moment(z, x, 0.0);
    const auto si = estimate_structural_inverse(theta, m, 1e-10);
    const Matrix gram = m.m_hat.transpose() * symmetrize(theta.theta_hat) * m.m_hat;
    CHECK((si.theta_m_hat - gram.inverse()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("exact inverses examples") {
    Rng rng(61);
    const Matrix z = ar1_sample(rng, 300, 4, 0.3);
    const Matrix x = z.leftCols(3) + test::normal_matrix(rng, 300, 3);
    const auto ex = exact_inverses(z, x);
    const Matrix s = z.transpose() * z / 300.0;
    CHECK((ex.precision.theta_hat * s - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix mm = ex.cross_moment.m_hat;
    CHECK(mm == ex.cross_moment.m_tilde);
    CHECK((ex.structural_inverse.theta_m_hat * mm.transpose() * ex.precision.theta_hat * mm -
           Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    for (const auto& c : ex.precision.certificates) CHECK(std::isinf(c.bound));
}

TEST_CASE("exact structural inverse matches the 2x2 cofactor formula") {
    // Sigma_hat = I, so Theta_m = (M'M)^{-1}.
    const Matrix z = orthonormal_design(67, 60, 2);
    Matrix pi(2, 2);
    pi << 1.0, 0.4, -0.3, 0.8;
    const Matrix x = z * pi;
    const auto ex = exact_inverses(z, x);
    const Matrix g = pi.transpose() * pi;
    const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    Matrix cofactor(2, 2);
    cofactor << g(1, 1), -g(0, 1), -g(1, 0), g(0, 0);
    CHECK((ex.structural_inverse.theta_m_hat - cofactor / det).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("exact inverses reject invalid shapes and singular input") {
    Rng rng(71);
    const Matrix z = test::normal_matrix(rng, 5, 6);
    CHECK_THROWS_AS(exact_inverses(z, z.leftCols(2)), DataError);
    Matrix zs = test::normal_matrix(rng, 50, 3);
    zs.col(2) = zs.col(0);
    CHECK_THROWS_AS(exact_inverses(zs, zs.leftCols(2)), NumericalError);
}

TEST_CASE("property: certificates hold for every row at every lambda") {
    Rng rng(73);
    for (int rep = 0; rep < 4; ++rep) {
        const Matrix z = ar1_sample(rng, 40, 30, 0.5);
        const Matrix x = z.leftCols(10) + test::normal_matrix(rng, 40, 10);
        for (const double lambda : {0.005, 0.05, 0.3}) {
            const auto theta = estimate_precision_nodewise(z, lambda);
            const Matrix s = symmetrize(z.transpose() * z / 40.0);
            for (Eigen::Index j = 0; j < 30; ++j) {
                const double observed = (s * theta.theta_hat.row(j).transpose() -
                                         Vector::Unit(30, j)).cwiseAbs().maxCoeff();
                CHECK(observed <= lambda / theta.tau_sq(j) + kCertificateSlack);
                CHECK(theta.tau_sq(j) > 0.0);
            }
            const auto m = threshold_cross_moment(z, x, 0.5);
            if (m.kept_count == 0) continue;
            RegularizedMatrices all{theta, m, estimate_structural_inverse(theta, m, lambda)};
            CHECK_NOTHROW(assert_certificates(all));
        }
    }
}

TEST_CASE("nodewise results do not depend on the thread count") {
    Rng rng(79);
    const Matrix z = ar1_sample(rng, 30, 25, 0.5);
    const auto one = estimate_precision_nodewise(z, 0.02, {}, 1);
    const auto four = estimate_precision_nodewise(z, 0.02, {}, 4);
    CHECK(one.theta_hat == four.theta_hat);
}
