#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdiv/model.hpp"
#include "hdiv/tuning.hpp"

namespace hdiv {

/// per_rep: full cross-validation on every replication.
/// once:    cross-validation on replication 0's sample, reused for all.
/// fixed:   penalties taken from SimulationConfig::penalties.
enum class TuningMode { per_rep, once, fixed };

std::string to_string(TuningMode mode);
TuningMode parse_tuning_mode(const std::string& text);

/// Linear Gaussian design with one endogenous regressor:
///   Z ~ N(0, Sigma), Sigma_jk = 0.5^|j-k|, (U, V) standard bivariate normal
///   with correlation rho, independent of Z;
///   X_1 = alpha1 Z_1 + alpha_{-1}'Z_{2:q} + sqrt(2 - alpha1^2) V,
///   X = (X_1, Z_{2:p}),  Y = X'beta0 + U.
struct SimulationConfig {
    int n = 100;
    int p = 200;
    int q = 200;
    double rho = 0.5;
    double alpha1 = 1.0;
    int replications = 1000;
    std::uint64_t seed = 20190101;
    double level = 0.95;
    TuningMode tuning = TuningMode::once;
    TuningConfig penalties;            // lambdas used by `fixed`; c0 and solver used always
    int cv_folds = 10;
    std::optional<double> lambda0;     // scaled Lasso; default sqrt(2 log p / n)
};

void validate_simulation(const SimulationConfig& config);

struct SimulationTruth {
    Vector beta0;         // p
    Vector alpha;         // q: (alpha1, alpha_{-1})
    Matrix sigma;         // q x q
    Matrix sigma_factor;  // lower Cholesky factor of sigma
    Matrix m_pop;         // q x p, E[Z X']
    double omega2_pop = 0.0;
    double sigma_u_sq = 1.0;
};

struct SimulatedSample {
    IVDataset data;
    Vector u;  // true structural errors
};

struct ReplicationRecord {
    int index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string failure;
    double beta_hat_1 = 0.0;
    double beta_tilde_1 = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    bool covered = false;
    double standardized = 0.0;   // sqrt(n)(beta_hat_1 - beta0_1) / sqrt(Omega_11)
    double sigma_hat = 0.0;
    double identity_residual = 0.0;
    double delta_inf = 0.0;
    double noise_inf = 0.0;
    double min_certificate_slack = 0.0;
};

struct MonteCarloSummary {
    double abs_mean_bias_desparsified = 0.0;
    double abs_mean_bias_lasso = 0.0;
    double coverage = 0.0;
    double mean_ci_width = 0.0;
    std::vector<double> standardized_stats;  // ascending
    int replication_failures = 0;
    int successful = 0;
};

struct MonteCarloResult {
    MonteCarloSummary summary;
    std::vector<ReplicationRecord> records;
    TuningConfig penalties;          // as used (for per_rep: the ones of replication 0)
    std::vector<std::string> deviations;
};

SimulationTruth build_truth(const SimulationConfig& config);

SimulatedSample sample_dataset(const SimulationTruth& truth, const SimulationConfig& config,
                               std::uint64_t rep_seed);

std::uint64_t replication_seed(const SimulationConfig& config, int index);

/// One replication. Under TuningMode::per_rep, `penalties` is ignored and the
/// penalties are re-tuned on the sample. Numerical failures are recorded in
/// the returned record.
ReplicationRecord run_replication(const SimulationTruth& truth, const SimulationConfig& config,
                                  const TuningConfig& penalties, int index);

/// Penalties for the run: config.penalties for `fixed`, otherwise
/// cross-validated on replication 0's sample.
TuningConfig initial_penalties(const SimulationTruth& truth, const SimulationConfig& config,
                               unsigned threads = 1);

MonteCarloSummary summarize(const std::vector<ReplicationRecord>& records, double beta1_true);

/// Runs all replications on up to `threads` workers; results are identical
/// for any worker count. Throws NumericalError if every replication failed.
MonteCarloResult run_monte_carlo(const SimulationTruth& truth, const SimulationConfig& config,
                                 unsigned threads = 1);

/// (theoretical, empirical) pairs with theoretical = Phi^{-1}((i - 0.5) / m).
std::vector<std::pair<double, double>> qq_points(const std::vector<double>& sorted_stats);

}  // namespace hdiv
