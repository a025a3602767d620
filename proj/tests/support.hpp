#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "hdiv/lasso.hpp"
#include "hdiv/model.hpp"
#include "hdiv/random.hpp"

namespace hdiv::test {

inline Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

inline Vector normal_vector(Rng& rng, Eigen::Index n) { return normal_matrix(rng, n, 1).col(0); }

/// Low-dimensional IV sample: X = Z Pi + V, Y = X beta + U with corr(U, V_1) = 0.5.
inline IVDataset iv_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index p, Eigen::Index q) {
    Rng rng(seed);
    IVDataset d;
    d.z = normal_matrix(rng, n, q);
    Matrix pi = normal_matrix(rng, q, p);
    pi.topRows(p) += 2.0 * Matrix::Identity(p, p);
    const Vector u = normal_vector(rng, n);
    Matrix v = normal_matrix(rng, n, p);
    v.col(0) = 0.5 * u + std::sqrt(0.75) * v.col(0);
    d.x = d.z * pi + v;
    Vector beta(p);
    for (Eigen::Index j = 0; j < p; ++j) beta(j) = 1.0 + static_cast<double>(j);
    d.y = d.x * beta + u;
    return d;
}

/// (M' S^{-1} M)^{-1} M' S^{-1} Z'Y/n with S = Z'Z/n, M = Z'X/n.
inline Vector two_stage_least_squares(const IVDataset& d) {
    const double n = static_cast<double>(d.n());
    const Matrix s = d.z.transpose() * d.z / n;
    const Matrix m = d.z.transpose() * d.x / n;
    const Vector zy = d.z.transpose() * d.y / n;
    const Matrix s_inv_m = s.ldlt().solve(m);
    const Vector s_inv_zy = s.ldlt().solve(zy);
    return (m.transpose() * s_inv_m).ldlt().solve(m.transpose() * s_inv_zy);
}

inline QuadraticLassoProblem two_dim(double q11, double q12, double q22, double c1, double c2,
                                     double lambda) {
    QuadraticLassoProblem p;
    p.q.resize(2, 2);
    p.q << q11, q12, q12, q22;
    p.c.resize(2);
    p.c << c1, c2;
    p.lambda = lambda;
    return p;
}

// Exhaustive search over the [-2, 2]^2 box: a 1e-2 scan, then every 1e-4
// lattice point within 0.02 of the coarse minimizer.
inline Vector grid_oracle(const QuadraticLassoProblem& p) {
    double best = std::numeric_limits<double>::infinity();
    Vector arg = Vector::Zero(2);
    Vector b(2);
    for (int i = -200; i <= 200; ++i) {
        for (int k = -200; k <= 200; ++k) {
            b << i * 0.01, k * 0.01;
            const double v = lasso_objective(p, b);
            if (v < best) best = v, arg = b;
        }
    }
    const Vector coarse = arg;
    best = std::numeric_limits<double>::infinity();
    for (int i = -200; i <= 200; ++i) {
        for (int k = -200; k <= 200; ++k) {
            b << std::round(coarse(0) * 1e4 + i) * 1e-4, std::round(coarse(1) * 1e4 + k) * 1e-4;
            const double v = lasso_objective(p, b);
            if (v < best) best = v, arg = b;
        }
    }
    return arg;
}

}  // namespace hdiv::test
