#pragma once

#include <Eigen/Dense>

#include "hdiv/error.hpp"

namespace hdiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observed sample of the linear IV model Y = X'beta + U with E[UZ] = 0.
///
/// Rows are observations. Exogenous covariates that appear in both X and Z
/// are stored twice, once in each matrix.
struct IVDataset {
    Vector y;  // n
    Matrix x;  // n x p, endogenous and exogenous covariates
    Matrix z;  // n x q, instruments and exogenous covariates

    Eigen::Index n() const { return y.size(); }
    Eigen::Index p() const { return x.cols(); }
    Eigen::Index q() const { return z.cols(); }
};

struct SolverOptions {
    int max_sweeps = 10000;
    double tol = 1e-8;
};

/// Penalty levels and solver settings for one estimation run.
///
/// All penalties follow the factor-2 convention of the objective
/// f(beta) + 2 * lambda * ||beta||_1.
struct TuningConfig {
    double lambda = 0.0;         // IV Lasso
    double lambda_node = 0.0;    // shared nodewise penalty for the precision estimate
    double lambda_node_m = 0.0;  // shared nodewise penalty for the structural inverse
    double c0 = 0.5;             // threshold constant for the cross moment
    int max_sweeps = 10000;
    double tol = 1e-8;

    SolverOptions solver() const { return {max_sweeps, tol}; }
};

/// Checks shapes, the order condition q >= p and finiteness. Returns the
/// dataset unchanged; throws DataError naming the offending location.
IVDataset validate_dataset(IVDataset data);
const IVDataset& validate_dataset_ref(const IVDataset& data);

/// Throws DataError unless every penalty is non-negative and tol > 0.
void validate_tuning(const TuningConfig& config);

/// Subtracts column means from Y, X and Z. Never applied implicitly.
IVDataset center_columns(IVDataset data);

}  // namespace hdiv
