#pragma once

#include <cstdint>
#include <vector>

#include "hdiv/model.hpp"

namespace hdiv {

struct CVConfig {
    int folds = 10;
    std::vector<double> grid;  // ascending, strictly positive; empty selects the default grid
    std::uint64_t seed = 0;
};

struct CVResult {
    double chosen_lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_curve;      // mean held-out loss per grid entry
    std::vector<int> fold_assignment;  // fold index per row
};

/// How the nodewise Gram matrix scales with the number of rows.
///   mean: G = A'A / rows (observations, as for Z)
///   sum:  G = A'A, with training folds rescaled by rows / training_rows
///         (for B = Theta^{1/2} M_hat, whose rows are instruments)
enum class GramScale { mean, sum };

/// Row i goes to fold position(i) mod folds after a seeded shuffle.
std::vector<int> assign_folds(Eigen::Index rows, int folds, std::uint64_t seed);

/// `count` log-spaced values from lambda_max * ratio to lambda_max, ascending.
std::vector<double> log_grid(double lambda_max, int count = 30, double ratio = 1e-3);

/// Index of the smallest loss; losses within 1e-12 of the minimum resolve to
/// the larger lambda.
std::size_t select_index(const std::vector<double>& grid, const std::vector<double>& losses);

/// Shared nodewise penalty minimizing the held-out squared prediction error
/// summed over all node regressions and averaged over folds.
CVResult cv_nodewise_lambda(const Matrix& a, const CVConfig& config, GramScale scale,
                            const SolverOptions& options = {}, unsigned threads = 1);

/// IV Lasso penalty. Each fold refits Theta_hat (penalty base.lambda_node)
/// and M_hat (constant base.c0) on the training rows; the held-out loss is
///   (Z_te'Y_te/n_te - M_tr b)' Theta_tr (Z_te'Y_te/n_te - M_tr b).
CVResult cv_iv_lasso_lambda(const IVDataset& data, const CVConfig& config,
                            const TuningConfig& base, unsigned threads = 1);

/// Largest useful IV Lasso penalty on the full data for the given nodewise
/// penalty and threshold constant.
double iv_lasso_lambda_max(const IVDataset& data, const TuningConfig& base);

struct TunedPenalties {
    TuningConfig config;
    CVResult node;
    CVResult node_m;
    CVResult iv;
};

/// Staged tuning: lambda_node on Z, then lambda_node_m on B built with the
/// chosen lambda_node, then lambda with both fixed. base.c0 and the solver
/// settings are kept. Grids in `config` are ignored; each stage uses its
/// default grid.
TunedPenalties tune_penalties(const IVDataset& data, const CVConfig& config,
                              const TuningConfig& base, unsigned threads = 1);

}  // namespace hdiv
