#pragma once

#include <string>
#include <vector>

namespace proact {

// Row-major dense matrix; sized for regression designs, not BLAS workloads.
struct Matrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), data(r * c, 0.0) {}

    double &at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
};

struct RankError {
    bool deficient = false;
    std::size_t rank = 0;
    std::vector<std::size_t> dropped_columns; // indices not among the pivots
};

struct LeastSquares {
    std::vector<double> coef;                 // original column order
    std::vector<std::vector<double>> xtx_inv; // (X'X)^-1, original order
    std::vector<double> residuals;
    RankError rank;
};

// Householder QR with column pivoting. When the trailing column norm falls
// below rel_tol times the largest initial column norm the design is reported
// rank-deficient and no fit is produced.
LeastSquares solve_least_squares(const Matrix &X, const std::vector<double> &y,
                                 double rel_tol = 1e-10);

} // namespace proact
