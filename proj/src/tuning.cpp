#include "hdiv/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdiv/estimator.hpp"
#include "hdiv/lasso.hpp"
#include "hdiv/linalg.hpp"
#include "hdiv/parallel.hpp"
#include "hdiv/random.hpp"
#include "hdiv/regularized_matrices.hpp"

namespace hdiv {

namespace {

using Index = Eigen::Index;

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DataError("cross-validation grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw DataError("cross-validation grid must be strictly positive");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw DataError("cross-validation grid must be sorted ascending");
        }
    }
}

void check_folds(Index rows, int folds) {
    if (folds < 2) throw DataError("need at least 2 folds");
    if (folds > rows) {
        throw DataError("more folds (" + std::to_string(folds) + ") than rows (" +
                        std::to_string(rows) + "): a fold would have no held-out rows");
    }
}

struct FoldRows {
    std::vector<Index> train;
    std::vector<Index> test;
};

std::vector<FoldRows> split_rows(const std::vector<int>& assignment, int folds) {
    std::vector<FoldRows> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        for (int k = 0; k < folds; ++k) {
            auto& target = (assignment[i] == k) ? out[k].test : out[k].train;
            target.push_back(static_cast<Index>(i));
        }
    }
    for (int k = 0; k < folds; ++k) {
        if (out[k].test.empty()) {
            throw DataError("fold " + std::to_string(k + 1) + " has no held-out rows");
        }
    }
    return out;
}

std::vector<Index> all_but(Index d, Index j) {
    std::vector<Index> idx;
    for (Index k = 0; k < d; ++k) {
        if (k != j) idx.push_back(k);
    }
    return idx;
}

double max_off_diagonal(const Matrix& g) {
    double m = 0.0;
    for (Index j = 0; j < g.cols(); ++j) {
        for (Index i = 0; i < g.rows(); ++i) {
            if (i != j) m = std::max(m, std::abs(g(i, j)));
        }
    }
    return m;
}

Matrix scaled_gram(const Matrix& a, GramScale scale, double total_rows) {
    Matrix g = symmetrize(a.transpose() * a);
    const double rows = static_cast<double>(a.rows());
    if (scale == GramScale::mean) {
        g /= rows;
    } else {
        g *= total_rows / rows;
    }
    return g;
}

CVResult finish(std::vector<double> grid, const std::vector<std::vector<double>>& fold_losses,
                std::vector<int> assignment) {
    CVResult out;
    out.cv_curve.assign(grid.size(), 0.0);
    for (const auto& losses : fold_losses) {
        for (std::size_t i = 0; i < grid.size(); ++i) out.cv_curve[i] += losses[i];
    }
    for (auto& v : out.cv_curve) v /= static_cast<double>(fold_losses.size());
    out.chosen_lambda = grid[select_index(grid, out.cv_curve)];
    out.grid = std::move(grid);
    out.fold_assignment = std::move(assignment);
    return out;
}

}  // namespace

std::vector<int> assign_folds(Index rows, int folds, std::uint64_t seed) {
    check_folds(rows, folds);
    Rng rng(derive_seed(seed, 0xF01D));
    const auto perm = rng.permutation(static_cast<std::size_t>(rows));
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        out[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    }
    return out;
}

std::vector<double> log_grid(double lambda_max, int count, double ratio) {
    if (!(lambda_max > 0.0)) lambda_max = 1.0;
    if (count < 1) throw DataError("grid size must be positive");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lambda_max;
        return out;
    }
    const double lo = std::log(lambda_max * ratio);
    const double hi = std::log(lambda_max);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
    }
    out.back() = lambda_max;
    return out;
}

std::size_t select_index(const std::vector<double>& grid, const std::vector<double>& losses) {
    if (grid.size() != losses.size() || grid.empty()) {
        throw DataError("select_index: grid and losses differ in length");
    }
    double best = losses[0];
    for (const double v : losses) best = std::min(best, v);
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (losses[i] <= best + 1e-12 && grid[i] >= grid[chosen]) chosen = i;
    }
    return chosen;
}

CVResult cv_nodewise_lambda(const Matrix& a, const CVConfig& config, GramScale scale,
                            const SolverOptions& options, unsigned threads) {
    const Index rows = a.rows();
    const Index d = a.cols();
    if (d < 2) throw DataError("nodewise cross-validation needs at least 2 columns");
    check_folds(rows, config.folds);
    std::vector<double> grid = config.grid;
    if (grid.empty()) grid = log_grid(max_off_diagonal(scaled_gram(a, scale, rows)));
    check_grid(grid);

    auto assignment = assign_folds(rows, config.folds, config.seed);
    const auto folds = split_rows(assignment, config.folds);
    const std::size_t g = grid.size();
    std::vector<std::vector<double>> fold_losses(folds.size(), std::vector<double>(g, 0.0));

    for (std::size_t k = 0; k < folds.size(); ++k) {
        const Matrix train = a(folds[k].train, Eigen::all);
        const Matrix test = a(folds[k].test, Eigen::all);
        const Matrix gram = scaled_gram(train, scale, static_cast<double>(rows));
        const double n_test = static_cast<double>(test.rows());

        std::vector<std::vector<double>> node_losses(static_cast<std::size_t>(d),
                                                     std::vector<double>(g, 0.0));
        parallel_for(static_cast<std::size_t>(d), threads, [&](std::size_t node) {
            const auto j = static_cast<Index>(node);
            const auto rest = all_but(d, j);
            QuadraticLassoProblem prob;
            prob.q = gram(rest, rest);
            prob.c = gram(rest, j);
            const Matrix test_rest = test(Eigen::all, rest);
            std::optional<Vector> warm;
            for (std::size_t i = g; i-- > 0;) {
                prob.lambda = grid[i];
                const LassoFit fit = solve_quadratic_lasso(prob, warm, options);
                warm = fit.coefficients;
                const Vector resid = test.col(j) - test_rest * fit.coefficients;
                node_losses[node][i] = resid.squaredNorm() / n_test;
            }
        });
        for (const auto& losses : node_losses) {
            for (std::size_t i = 0; i < g; ++i) fold_losses[k][i] += losses[i];
        }
    }
    return finish(std::move(grid), fold_losses, std::move(assignment));
}

double iv_lasso_lambda_max(const IVDataset& data, const TuningConfig& base) {
    const auto prec = estimate_precision_nodewise(data.z, base.lambda_node, base.solver());
    const auto cross = threshold_cross_moment(data.z, data.x, base.c0);
    const Vector zty = data.z.transpose() * data.y / static_cast<double>(data.n());
    const Matrix root = symmetric_psd_sqrt(prec.theta_hat, kSqrtFloor);
    return lambda_max(iv_lasso_problem(zty, root, cross.m_hat, 0.0));
}

CVResult cv_iv_lasso_lambda(const IVDataset& data, const CVConfig& config,
                            const TuningConfig& base, unsigned threads) {
    validate_dataset_ref(data);
    validate_tuning(base);
    check_folds(data.n(), config.folds);
    std::vector<double> grid = config.grid;
    if (grid.empty()) grid = log_grid(iv_lasso_lambda_max(data, base));
    check_grid(grid);

    auto assignment = assign_folds(data.n(), config.folds, config.seed);
    const auto folds = split_rows(assignment, config.folds);
    const std::size_t g = grid.size();
    std::vector<std::vector<double>> fold_losses(folds.size(), std::vector<double>(g, 0.0));

    parallel_for(folds.size(), threads, [&](std::size_t k) {
        const auto& tr = folds[k].train;
        const auto& te = folds[k].test;
        const Matrix z_tr = data.z(tr, Eigen::all);
        const Matrix x_tr = data.x(tr, Eigen::all);
        const Vector y_tr = data.y(tr);
        const auto prec = estimate_precision_nodewise(z_tr, base.lambda_node, base.solver());
        const auto cross = threshold_cross_moment(z_tr, x_tr, base.c0);
        const Matrix root = symmetric_psd_sqrt(prec.theta_hat, kSqrtFloor);
        const Vector zty_tr = z_tr.transpose() * y_tr / static_cast<double>(tr.size());
        QuadraticLassoProblem prob = iv_lasso_problem(zty_tr, root, cross.m_hat, 0.0);

        const Vector zty_te =
            data.z(te, Eigen::all).transpose() * data.y(te) / static_cast<double>(te.size());
        std::optional<Vector> warm;
        for (std::size_t i = g; i-- > 0;) {
            prob.lambda = grid[i];
            const LassoFit fit = solve_quadratic_lasso(prob, warm, base.solver());
            warm = fit.coefficients;
            const Vector moment = zty_te - cross.m_hat * fit.coefficients;
            fold_losses[k][i] = moment.dot(prec.theta_hat * moment);
        }
    });
    return finish(std::move(grid), fold_losses, std::move(assignment));
}

TunedPenalties tune_penalties(const IVDataset& data, const CVConfig& config,
                              const TuningConfig& base, unsigned threads) {
    validate_dataset_ref(data);
    CVConfig stage = config;
    stage.grid.clear();

    TunedPenalties out;
    out.config = base;
    out.node = cv_nodewise_lambda(data.z, stage, GramScale::mean, base.solver(), threads);
    out.config.lambda_node = out.node.chosen_lambda;

    const auto prec =
        estimate_precision_nodewise(data.z, out.config.lambda_node, base.solver(), threads);
    const auto cross = threshold_cross_moment(data.z, data.x, base.c0);
    const Matrix b = symmetric_psd_sqrt(prec.theta_hat, kSqrtFloor) * cross.m_hat;
    out.node_m = cv_nodewise_lambda(b, stage, GramScale::sum, base.solver(), threads);
    out.config.lambda_node_m = out.node_m.chosen_lambda;

    out.iv = cv_iv_lasso_lambda(data, stage, out.config, threads);
    out.config.lambda = out.iv.chosen_lambda;
    return out;
}

}  // namespace hdiv
