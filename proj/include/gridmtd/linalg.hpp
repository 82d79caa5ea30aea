#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "gridmtd/errors.hpp"

namespace gridmtd {

using Vec = std::vector<double>;

/// Dense row-major matrix. Sized for the problems this toolkit solves
/// (tens of rows/columns); no sparse storage, no expression templates.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec operator*(const Vec& v) const {
        Vec out(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            double acc = 0.0;
            const double* row = &data_[r * cols_];
            for (std::size_t c = 0; c < cols_; ++c) acc += row[c] * v[c];
            out[r] = acc;
        }
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double max_abs(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

/// Cholesky factor of a symmetric positive definite matrix (lower
/// triangular, stored dense). Fails on indefinite or singular input.
class CholeskyFactor {
public:
    static std::optional<CholeskyFactor> compute(const Mat& a) {
        const std::size_t n = a.rows();
        CholeskyFactor f;
        f.l_ = Mat(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            double d = a(j, j);
            for (std::size_t k = 0; k < j; ++k) d -= f.l_(j, k) * f.l_(j, k);
            if (!(d > 0.0)) return std::nullopt;
            const double ljj = std::sqrt(d);
            f.l_(j, j) = ljj;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= f.l_(i, k) * f.l_(j, k);
                f.l_(i, j) = s / ljj;
            }
        }
        return f;
    }

    /// Solve A x = b given A = L Lᵀ.
    Vec solve(const Vec& b) const {
        const std::size_t n = l_.rows();
        Vec y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
            y[i] = s / l_(i, i);
        }
        Vec x(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * x[k];
            x[ii] = s / l_(ii, ii);
        }
        return x;
    }

private:
    Mat l_;
};

/// Solve a square system by Gaussian elimination with partial pivoting.
inline std::optional<Vec> lu_solve(Mat a, Vec b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) return std::nullopt;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-12) return std::nullopt;
        if (piv != col) {
            for (std::size_t c = col; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a(r, col) / a(col, col);
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
            b[r] -= factor * b[col];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t c = ii + 1; c < n; ++c) s -= a(ii, c) * x[c];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

/// Solve a possibly rectangular system M x = rhs requiring a unique,
/// consistent solution. Full-pivot elimination; returns nullopt when the
/// system is rank-deficient (continuum of solutions) or inconsistent.
/// Used by equilibrium support enumeration, where both outcomes mean
/// "this support pair yields no isolated candidate".
inline std::optional<Vec> solve_unique(Mat m, Vec rhs, double tol = 1e-9) {
    const std::size_t nr = m.rows();
    const std::size_t nc = m.cols();
    if (rhs.size() != nr) return std::nullopt;

    double scale = tol;
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) scale = std::max(scale, std::abs(m(r, c)));
    const double rank_tol = tol * scale;

    std::vector<std::size_t> col_of_step;
    std::size_t step = 0;
    std::vector<char> col_used(nc, 0);
    while (step < nr) {
        // full pivot over remaining rows/unused columns
        std::size_t pr = step, pc = nc;
        double best = rank_tol;
        for (std::size_t r = step; r < nr; ++r)
            for (std::size_t c = 0; c < nc; ++c)
                if (!col_used[c] && std::abs(m(r, c)) > best) {
                    best = std::abs(m(r, c));
                    pr = r;
                    pc = c;
                }
        if (pc == nc) break; // no pivot left
        if (pr != step) {
            for (std::size_t c = 0; c < nc; ++c) std::swap(m(pr, c), m(step, c));
            std::swap(rhs[pr], rhs[step]);
        }
        col_used[pc] = 1;
        col_of_step.push_back(pc);
        for (std::size_t r = 0; r < nr; ++r) {
            if (r == step) continue;
            const double factor = m(r, pc) / m(step, pc);
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < nc; ++c) m(r, c) -= factor * m(step, c);
            m(r, pc) = 0.0;
            rhs[r] -= factor * rhs[step];
        }
        ++step;
    }

    if (step < nc) return std::nullopt; // rank-deficient: no unique solution
    // consistency of the eliminated surplus rows
    for (std::size_t r = step; r < nr; ++r)
        if (std::abs(rhs[r]) > tol * (1.0 + scale)) return std::nullopt;

    Vec x(nc, 0.0);
    for (std::size_t s = 0; s < step; ++s) x[col_of_step[s]] = rhs[s] / m(s, col_of_step[s]);
    return x;
}

} // namespace gridmtd
