#include <doctest.h>

#include <cmath>
#include <memory>

#include "hdiv/estimator.hpp"
#include "hdiv/linalg.hpp"
#include "hdiv/simulation.hpp"
#include "support.hpp"

using namespace hdiv;

namespace {

std::shared_ptr<const RegularizedMatrices> shared(RegularizedMatrices m) {
    return std::make_shared<const RegularizedMatrices>(std::move(m));
}

}  // namespace

TEST_CASE("exact path reproduces 2SLS for both estimators") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = test::iv_instance(seed, 300, 3, 5);
        const auto mats = shared(exact_inverses(d.z, d.x));
        const auto fit = fit_iv_lasso(d, *mats, 0.0, {});
        const auto bundle = desparsify(d, fit.coefficients, mats);
        const Vector tsls = test::two_stage_least_squares(d);
        CHECK((fit.coefficients - tsls).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((bundle.beta_hat - tsls).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("large lambda shrinks the IV Lasso to zero") {
    const auto d = test::iv_instance(9, 200, 3, 6);
    TuningConfig t;
    t.lambda_node = 0.05;
    t.lambda_node_m = 0.05;
    const auto mats = build_regularized_matrices(d, t);
    const double n = static_cast<double>(d.n());
    const auto prob = iv_lasso_problem(d.z.transpose() * d.y / n,
                                       mats.structural_inverse.theta_root,
                                       mats.cross_moment.m_hat, 0.0);
    const auto fit = fit_iv_lasso(d, mats, lambda_max(prob) * 1.0001, {});
    CHECK(fit.coefficients.isZero(0.0));
}

TEST_CASE("both fit_iv_lasso overloads agree") {
    const auto d = test::iv_instance(10, 150, 4, 8);
    TuningConfig t;
    t.lambda_node = 0.02;
    t.lambda_node_m = 0.02;
    const auto mats = build_regularized_matrices(d, t);
    const auto a = fit_iv_lasso(d, mats, 0.05, {});
    const auto b = fit_iv_lasso(d, mats.precision, mats.cross_moment, 0.05, {});
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("correction vanishes when the projection inverts Z'X/n") {
    const auto d = test::iv_instance(12, 100, 2, 2);
    const auto mats = shared(exact_inverses(d.z, d.x));  // q = p: P Z'X/n = I
    const Vector any = Vector::Constant(2, 17.0);
    const auto bundle = desparsify(d, any, mats);
    CHECK(bundle.correction.cwiseAbs().maxCoeff() < 1e-10);
    CHECK((bundle.beta_hat - bundle.first_term).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("property: beta_hat is affine in beta_tilde with slope -correction") {
    const auto d = test::iv_instance(13, 120, 4, 10);
    TuningConfig t;
    t.lambda_node = 0.03;
    t.lambda_node_m = 0.03;
    const auto mats = shared(build_regularized_matrices(d, t));
    Rng rng(1);
    const Vector b1 = test::normal_vector(rng, 4);
    const Vector b2 = test::normal_vector(rng, 4);
    const auto e1 = desparsify(d, b1, mats);
    const auto e2 = desparsify(d, b2, mats);
    CHECK(((e1.beta_hat - e2.beta_hat) + e1.correction * (b1 - b2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((e1.first_term - e1.correction * b1 - e1.beta_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("decomposition: exact beta gives zero delta; identity holds") {
    SimulationConfig c;
    c.n = 60;
    c.p = 20;
    c.q = 30;
    const auto truth = build_truth(c);
    const auto s = sample_dataset(truth, c, 5);
    TuningConfig t;
    t.lambda = 0.05;
    t.lambda_node = 0.1;
    t.lambda_node_m = 0.1;
    const auto mats = shared(build_regularized_matrices(s.data, t));
    const auto at_truth = desparsify(s.data, truth.beta0, mats);
    const auto diag0 = decompose(at_truth, s.data, truth.beta0, s.u);
    CHECK(diag0.delta.isZero(0.0));
    const auto fit = fit_iv_lasso(s.data, *mats, t.lambda, {});
    const auto bundle = desparsify(s.data, fit.coefficients, mats);
    CHECK(decompose(bundle, s.data, truth.beta0, s.u).identity_residual <= 1e-10);
}

TEST_CASE("omega2 examples") {
    Matrix m = Matrix::Identity(2, 2);
    CHECK(omega2_population(m, Matrix::Identity(2, 2)) == doctest::Approx(1.0));
    CHECK(omega2_population(3.0 * m, Matrix::Identity(2, 2)) == doctest::Approx(1.0 / 9.0));
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = std::sqrt(2.0);
    diag(1, 1) = std::sqrt(0.5);
    CHECK(omega2_population(diag, Matrix::Identity(2, 2)) == doctest::Approx(2.0));

    PrecisionEstimate theta;
    theta.theta_hat = Matrix::Identity(2, 2);
    CrossMomentEstimate cm;
    cm.m_hat = Matrix::Identity(2, 2);
    CHECK(omega2_hat(theta, cm) == doctest::Approx(1.0));
    cm.m_hat(1, 1) = 0.0;
    CHECK_THROWS_AS(omega2_hat(theta, cm), NumericalError);
}
