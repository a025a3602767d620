#include "hdiv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "hdiv/estimator.hpp"
#include "hdiv/inference.hpp"
#include "hdiv/parallel.hpp"
#include "hdiv/random.hpp"
#include "hdiv/regularized_matrices.hpp"

namespace hdiv {

std::string to_string(TuningMode mode) {
    switch (mode) {
        case TuningMode::per_rep: return "per-rep";
        case TuningMode::once: return "once";
        case TuningMode::fixed: return "fixed";
    }
    return "unknown";
}

TuningMode parse_tuning_mode(const std::string& text) {
    if (text == "per-rep") return TuningMode::per_rep;
    if (text == "once") return TuningMode::once;
    if (text == "fixed") return TuningMode::fixed;
    throw DataError("unknown tuning mode '" + text + "' (expected per-rep, once or fixed)");
}

void validate_simulation(const SimulationConfig& config) {
    if (config.n < 2) throw DataError("simulation: n must be at least 2");
    if (config.p < 1 || config.q < config.p) throw DataError("simulation: need 1 <= p <= q");
    if (!(config.rho > -1.0 && config.rho < 1.0)) throw DataError("simulation: rho must lie in (-1, 1)");
    if (!(std::abs(config.alpha1) <= std::sqrt(2.0))) {
        throw DataError("simulation: |alpha1| must not exceed sqrt(2)");
    }
    if (config.replications < 1) throw DataError("simulation: need at least one replication");
    if (!(config.level > 0.0 && config.level < 1.0)) throw DataError("simulation: level must lie in (0, 1)");
    validate_tuning(config.penalties);
}

SimulationTruth build_truth(const SimulationConfig& config) {
    validate_simulation(config);
    const Eigen::Index p = config.p;
    const Eigen::Index q = config.q;
    SimulationTruth t;

    t.beta0 = Vector::Zero(p);
    t.beta0(0) = 2.0;
    for (Eigen::Index j = 1; j <= std::min<Eigen::Index>(40, p - 1); ++j) {
        t.beta0(j) = 1.0 + static_cast<double>(j - 1) * 2.0 / 39.0;
    }

    t.alpha = Vector::Zero(q);
    t.alpha(0) = config.alpha1;
    for (Eigen::Index j = 1; j < q; ++j) t.alpha(j) = 4.0 / std::pow(static_cast<double>(j), 3);

    t.sigma.resize(q, q);
    for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index k = 0; k < q; ++k) {
            t.sigma(j, k) = std::pow(0.5, static_cast<double>(std::abs(j - k)));
        }
    }
    Eigen::LLT<Matrix> llt(t.sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of Sigma failed");
    t.sigma_factor = llt.matrixL();

    t.m_pop.resize(q, p);
    t.m_pop.col(0) = t.sigma * t.alpha;
    if (p > 1) t.m_pop.rightCols(p - 1) = t.sigma.middleCols(1, p - 1);
    t.omega2_pop = omega2_population(t.m_pop, t.sigma);
    t.sigma_u_sq = 1.0;
    return t;
}

SimulatedSample sample_dataset(const SimulationTruth& truth, const SimulationConfig& config,
                               std::uint64_t rep_seed) {
    const Eigen::Index n = config.n;
    const Eigen::Index p = config.p;
    const Eigen::Index q = config.q;
    Rng rng(rep_seed);
    Matrix xi(n, q);
    Vector u(n);
    Vector v(n);
    const double rho_c = std::sqrt(1.0 - config.rho * config.rho);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < q; ++j) xi(i, j) = rng.normal();
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        u(i) = e1;
        v(i) = config.rho * e1 + rho_c * e2;
    }

    SimulatedSample s;
    s.data.z = xi * truth.sigma_factor.transpose();
    s.data.x.resize(n, p);
    s.data.x.col(0) = s.data.z * truth.alpha +
                      std::sqrt(2.0 - config.alpha1 * config.alpha1) * v;
    if (p > 1) s.data.x.rightCols(p - 1) = s.data.z.middleCols(1, p - 1);
    s.data.y = s.data.x * truth.beta0 + u;
    s.u = std::move(u);
    return s;
}

std::uint64_t replication_seed(const SimulationConfig& config, int index) {
    return derive_seed(config.seed, static_cast<std::uint64_t>(index));
}

namespace {

double default_lambda0(const SimulationConfig& config) {
    return config.lambda0.value_or(
        std::sqrt(2.0 * std::log(static_cast<double>(config.p)) / config.n));
}

TuningConfig tune_on(const IVDataset& data, const SimulationConfig& config, std::uint64_t seed,
                     unsigned threads) {
    CVConfig cv;
    cv.folds = config.cv_folds;
    cv.seed = seed;
    return tune_penalties(data, cv, config.penalties, threads).config;
}

}  // namespace

TuningConfig initial_penalties(const SimulationTruth& truth, const SimulationConfig& config,
                               unsigned threads) {
    if (config.tuning == TuningMode::fixed) return config.penalties;
    const auto seed = replication_seed(config, 0);
    const auto sample = sample_dataset(truth, config, seed);
    return tune_on(sample.data, config, seed, threads);
}

ReplicationRecord run_replication(const SimulationTruth& truth, const SimulationConfig& config,
                                  const TuningConfig& penalties, int index) {
    ReplicationRecord rec;
    rec.index = index;
    rec.seed = replication_seed(config, index);
    try {
        const auto sample = sample_dataset(truth, config, rec.seed);
        const auto& data = sample.data;
        const TuningConfig tuned = config.tuning == TuningMode::per_rep
                                       ? tune_on(data, config, rec.seed, 1)
                                       : penalties;

        auto matrices =
            std::make_shared<const RegularizedMatrices>(build_regularized_matrices(data, tuned));
        const LassoFit lasso = fit_iv_lasso(data, *matrices, tuned.lambda, tuned.solver());
        const EstimateBundle bundle = desparsify(data, lasso.coefficients, matrices);

        const auto scaled =
            scaled_lasso_sigma(data, *matrices, default_lambda0(config), tuned.solver());
        const auto cov = estimate_covariance_homoscedastic(matrices->structural_inverse,
                                                           scaled.sigma_hat * scaled.sigma_hat);
        const Vector e1 = Vector::Unit(data.p(), 0);
        const auto ci = confidence_interval(bundle, cov, e1, config.level);
        const double omega11 = cov.omega_hat(0, 0);
        if (!(omega11 > 0.0)) throw NumericalError("non-positive variance estimate for beta_1");

        const auto diag = decompose(bundle, data, truth.beta0, sample.u);

        double slack = std::numeric_limits<double>::infinity();
        for (const auto& c : matrices->precision.certificates) slack = std::min(slack, c.slack());
        for (const auto& c : matrices->structural_inverse.certificates) {
            slack = std::min(slack, c.slack());
        }

        rec.beta_hat_1 = bundle.beta_hat(0);
        rec.beta_tilde_1 = bundle.beta_tilde(0);
        rec.ci_lower = ci.lower;
        rec.ci_upper = ci.upper;
        rec.covered = ci.lower <= truth.beta0(0) && truth.beta0(0) <= ci.upper;
        rec.standardized =
            std::sqrt(static_cast<double>(data.n())) * (bundle.beta_hat(0) - truth.beta0(0)) /
            std::sqrt(omega11);
        rec.sigma_hat = scaled.sigma_hat;
        rec.identity_residual = diag.identity_residual;
        rec.delta_inf = diag.delta.cwiseAbs().maxCoeff();
        rec.noise_inf = diag.noise_term.cwiseAbs().maxCoeff();
        rec.min_certificate_slack = slack;
        rec.ok = true;
    } catch (const Error& e) {
        rec.ok = false;
        rec.failure = e.what();
    }
    return rec;
}

MonteCarloSummary summarize(const std::vector<ReplicationRecord>& records, double beta1_true) {
    MonteCarloSummary s;
    double bias_hat = 0.0;
    double bias_tilde = 0.0;
    double width = 0.0;
    int covered = 0;
    for (const auto& r : records) {
        if (!r.ok) {
            ++s.replication_failures;
            continue;
        }
        ++s.successful;
        bias_hat += r.beta_hat_1 - beta1_true;
        bias_tilde += r.beta_tilde_1 - beta1_true;
        width += r.ci_upper - r.ci_lower;
        covered += r.covered ? 1 : 0;
        s.standardized_stats.push_back(r.standardized);
    }
    if (s.successful > 0) {
        const double m = s.successful;
        s.abs_mean_bias_desparsified = std::abs(bias_hat / m);
        s.abs_mean_bias_lasso = std::abs(bias_tilde / m);
        s.coverage = covered / m;
        s.mean_ci_width = width / m;
    }
    std::sort(s.standardized_stats.begin(), s.standardized_stats.end());
    return s;
}

MonteCarloResult run_monte_carlo(const SimulationTruth& truth, const SimulationConfig& config,
                                 unsigned threads) {
    validate_simulation(config);
    MonteCarloResult out;
    out.penalties = initial_penalties(truth, config, threads);
    if (config.tuning == TuningMode::once) {
        out.deviations.push_back(
            "penalties cross-validated once on replication 0 and reused for all replications");
    } else if (config.tuning == TuningMode::fixed) {
        out.deviations.push_back("penalties fixed by configuration; no cross-validation");
    }

    out.records.resize(static_cast<std::size_t>(config.replications));
    parallel_for(out.records.size(), threads, [&](std::size_t i) {
        out.records[i] = run_replication(truth, config, out.penalties, static_cast<int>(i));
    });
    out.summary = summarize(out.records, truth.beta0(0));
    if (out.summary.successful == 0) {
        throw NumericalError("all replications failed; first failure: " + out.records[0].failure);
    }
    return out;
}

std::vector<std::pair<double, double>> qq_points(const std::vector<double>& sorted_stats) {
    std::vector<std::pair<double, double>> out;
    const double m = static_cast<double>(sorted_stats.size());
    for (std::size_t i = 0; i < sorted_stats.size(); ++i) {
        out.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / m), sorted_stats[i]);
    }
    return out;
}

}  // namespace hdiv
