#include "proact/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace proact {

LeastSquares solve_least_squares(const Matrix &X, const std::vector<double> &y,
                                 double rel_tol) {
    const std::size_t n = X.n_rows;
    const std::size_t p = X.n_cols;
    if (y.size() != n)
        throw std::invalid_argument("design/response row mismatch");
    if (n < p)
        throw std::invalid_argument("fewer rows than columns");

    Matrix A = X;                 // reduced in place to R with Householder vectors below
    std::vector<double> qty = y;  // accumulates Q'y
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);

    auto col_norm2_below = [&](std::size_t col, std::size_t from) {
        double s = 0.0;
        for (std::size_t r = from; r < n; ++r)
            s += A.at(r, col) * A.at(r, col);
        return s;
    };

    double max_initial = 0.0;
    for (std::size_t c = 0; c < p; ++c)
        max_initial = std::max(max_initial, col_norm2_below(c, 0));
    const double threshold2 = max_initial * rel_tol * rel_tol;

    LeastSquares out;
    std::size_t rank = 0;
    for (std::size_t k = 0; k < p; ++k) {
        // pivot: remaining column with the largest residual norm
        std::size_t best = k;
        double best_norm = -1.0;
        for (std::size_t c = k; c < p; ++c) {
            double s = col_norm2_below(c, k);
            if (s > best_norm) {
                best_norm = s;
                best = c;
            }
        }
        if (best_norm <= threshold2 || max_initial == 0.0)
            break; // everything left is numerically null
        if (best != k) {
            for (std::size_t r = 0; r < n; ++r)
                std::swap(A.at(r, k), A.at(r, best));
            std::swap(perm[k], perm[best]);
        }

        // Householder reflector for column k
        double alpha = std::sqrt(best_norm);
        if (A.at(k, k) > 0)
            alpha = -alpha;
        double vk = A.at(k, k) - alpha;
        std::vector<double> v(n - k, 0.0);
        v[0] = vk;
        for (std::size_t r = k + 1; r < n; ++r)
            v[r - k] = A.at(r, k);
        double vnorm2 = 0.0;
        for (double x : v)
            vnorm2 += x * x;
        A.at(k, k) = alpha;
        for (std::size_t r = k + 1; r < n; ++r)
            A.at(r, k) = 0.0;
        if (vnorm2 > 0.0) {
            for (std::size_t c = k + 1; c < p; ++c) {
                double dot = 0.0;
                for (std::size_t r = k; r < n; ++r)
                    dot += v[r - k] * A.at(r, c);
                double f = 2.0 * dot / vnorm2;
                for (std::size_t r = k; r < n; ++r)
                    A.at(r, c) -= f * v[r - k];
            }
            double dot = 0.0;
            for (std::size_t r = k; r < n; ++r)
                dot += v[r - k] * qty[r];
            double f = 2.0 * dot / vnorm2;
            for (std::size_t r = k; r < n; ++r)
                qty[r] -= f * v[r - k];
        }
        ++rank;
    }

    out.rank.rank = rank;
    if (rank < p) {
        out.rank.deficient = true;
        for (std::size_t c = rank; c < p; ++c)
            out.rank.dropped_columns.push_back(perm[c]);
        std::sort(out.rank.dropped_columns.begin(), out.rank.dropped_columns.end());
        return out;
    }

    // back-substitute R b = Q'y (pivoted order), then un-permute
    std::vector<double> b(p, 0.0);
    for (std::size_t i = p; i-- > 0;) {
        double s = qty[i];
        for (std::size_t j = i + 1; j < p; ++j)
            s -= A.at(i, j) * b[j];
        b[i] = s / A.at(i, i);
    }
    out.coef.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        out.coef[perm[i]] = b[i];

    // (X'X)^-1 = P R^-1 R^-T P'; build R^-1 column by column
    std::vector<std::vector<double>> rinv(p, std::vector<double>(p, 0.0));
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<double> e(p, 0.0);
        e[c] = 1.0;
        for (std::size_t i = p; i-- > 0;) {
            double s = e[i];
            for (std::size_t j = i + 1; j < p; ++j)
                s -= A.at(i, j) * rinv[j][c];
            rinv[i][c] = i <= c ? s / A.at(i, i) : 0.0;
        }
    }
    out.xtx_inv.assign(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k)
                s += rinv[i][k] * rinv[j][k];
            out.xtx_inv[perm[i]][perm[j]] = s;
        }

    out.residuals.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double fitted = 0.0;
        for (std::size_t c = 0; c < p; ++c)
            fitted += X.at(r, c) * out.coef[c];
        out.residuals[r] = y[r] - fitted;
    }
    return out;
}

} // namespace proact
