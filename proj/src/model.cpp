#include "hdiv/model.hpp"

#include <cmath>
#include <string>

namespace hdiv {

namespace {

void check_finite(const Matrix& m, const char* name) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j))) {
                throw DataError(std::string("non-finite entry in ") + name + " at row " +
                                std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            }
        }
    }
}

}  // namespace

const IVDataset& validate_dataset_ref(const IVDataset& data) {
    const auto n = data.y.size();
    if (n < 2) throw DataError("need at least 2 observations, got " + std::to_string(n));
    if (data.x.rows() != n || data.z.rows() != n) {
        throw DataError("row count mismatch: Y has " + std::to_string(n) + " rows, X has " +
                        std::to_string(data.x.rows()) + ", Z has " +
                        std::to_string(data.z.rows()));
    }
    if (data.x.cols() < 1) throw DataError("X has no columns");
    if (data.z.cols() < data.x.cols()) {
        throw DataError("under-identified: q < p (q = " + std::to_string(data.z.cols()) +
                        ", p = " + std::to_string(data.x.cols()) + ")");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(data.y(i))) {
            throw DataError("non-finite entry in Y at row " + std::to_string(i + 1));
        }
    }
    check_finite(data.x, "X");
    check_finite(data.z, "Z");
    return data;
}

IVDataset validate_dataset(IVDataset data) {
    validate_dataset_ref(data);
    return data;
}

void validate_tuning(const TuningConfig& config) {
    if (!(config.lambda >= 0.0) || !(config.lambda_node >= 0.0) ||
        !(config.lambda_node_m >= 0.0) || !(config.c0 >= 0.0)) {
        throw DataError("penalties and c0 must be non-negative");
    }
    if (!(config.tol > 0.0)) throw DataError("tol must be positive");
    if (config.max_sweeps < 1) throw DataError("max_sweeps must be positive");
}

IVDataset center_columns(IVDataset data) {
    data.y.array() -= data.y.mean();
    data.x.rowwise() -= data.x.colwise().mean();
    data.z.rowwise() -= data.z.colwise().mean();
    return data;
}

}  // namespace hdiv
