#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gridmtd/errors.hpp"
#include "gridmtd/linalg.hpp"

namespace gridmtd {

inline constexpr double kLpInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kLpTolerance = 1e-9;

/// One general-form constraint: a . x (<= | >= | =) b.
struct LpRow {
    Vec coeffs;
    double rhs = 0.0;
    char relation = '<'; // '<', '>', '='
};

/// Minimize c . x subject to general rows and variable bounds
/// (lower may be -inf, upper may be +inf).
struct LpProblem {
    Vec objective;
    std::vector<LpRow> rows;
    Vec lower;
    Vec upper;

    int num_vars() const { return static_cast<int>(objective.size()); }

    void add_row(Vec a, char relation, double b) {
        rows.push_back({std::move(a), b, relation});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double objective = 0.0;
    int iterations = 0;
};

namespace detail {

/// Dense tableau simplex, two phases, Bland's pivoting rule throughout
/// (smallest eligible entering column; ratio ties broken by the smallest
/// basic variable index). Bland's rule cannot cycle, and its determinism
/// makes every solve byte-reproducible.
class SimplexTableau {
public:
    SimplexTableau(int rows, int cols) : m_(rows), n_(cols), t_(rows, cols + 1), basis_(rows, -1) {}

    double& at(int r, int c) { return t_(r, c); }
    double& rhs(int r) { return t_(r, n_); }
    void set_basis(int r, int var) { basis_[r] = var; }
    int basis(int r) const { return basis_[r]; }
    int rows() const { return m_; }
    int cols() const { return n_; }

    void pivot(int prow, int pcol) {
        const double p = t_(prow, pcol);
        for (int c = 0; c <= n_; ++c) t_(prow, c) /= p;
        for (int r = 0; r < m_; ++r) {
            if (r == prow) continue;
            const double f = t_(r, pcol);
            if (f == 0.0) continue;
            for (int c = 0; c <= n_; ++c) t_(r, c) -= f * t_(prow, c);
            t_(r, pcol) = 0.0;
        }
        basis_[prow] = pcol;
    }

    /// Run simplex iterations for the given cost vector over the columns
    /// marked eligible. Returns false when unbounded.
    bool iterate(const Vec& cost, const std::vector<char>& eligible, double& objective,
                 int& iterations) {
        // entering threshold scales with the cost magnitudes: columns whose
        // reduced cost is zero in exact arithmetic (free-variable rays)
        // must not enter on roundoff noise
        double cost_scale = 1.0;
        for (double c : cost) cost_scale = std::max(cost_scale, std::abs(c));
        const double enter_tol = kLpTolerance * cost_scale;

        // reduced costs maintained explicitly from the basis each pass;
        // with Bland's rule and these sizes, recomputing is simpler and
        // numerically self-correcting
        while (true) {
            Vec y(m_);
            for (int r = 0; r < m_; ++r) y[r] = cost[basis_[r]];
            int entering = -1;
            for (int c = 0; c < n_; ++c) {
                if (!eligible[c]) continue;
                double red = cost[c];
                for (int r = 0; r < m_; ++r) red -= y[r] * t_(r, c);
                if (red < -enter_tol) {
                    entering = c;
                    break; // Bland: smallest index
                }
            }
            if (entering < 0) break;

            int leaving = -1;
            double best_ratio = 0.0;
            for (int r = 0; r < m_; ++r) {
                const double a = t_(r, entering);
                if (a > kLpTolerance) {
                    const double ratio = rhs(r) / a;
                    if (leaving < 0 || ratio < best_ratio - kLpTolerance ||
                        (std::abs(ratio - best_ratio) <= kLpTolerance &&
                         basis_[r] < basis_[leaving])) {
                        leaving = r;
                        best_ratio = ratio;
                    }
                }
            }
            if (leaving < 0) return false; // unbounded direction
            pivot(leaving, entering);
            ++iterations;
            if (iterations > 200000)
                throw NumericalError("simplex iteration cap exceeded");
        }
        objective = 0.0;
        for (int r = 0; r < m_; ++r) objective += cost[basis_[r]] * rhs(r);
        return true;
    }

private:
    int m_;
    int n_;
    Mat t_;
    std::vector<int> basis_;
};

} // namespace detail

/// Solve a general-form LP. Deterministic: identical inputs produce an
/// identical pivot sequence and solution.
inline LpSolution solve_lp(const LpProblem& problem) {
    const int n = problem.num_vars();
    if (static_cast<int>(problem.lower.size()) != n ||
        static_cast<int>(problem.upper.size()) != n)
        throw ValidationError("LP bounds must cover every variable");

    // --- standard-form mapping -------------------------------------------
    // Every variable becomes one or two nonnegative columns; finite upper
    // bounds become extra <= rows.
    struct VarMap {
        int pos = -1;       // column of the positive part
        int neg = -1;       // column of the negative part (free vars)
        double shift = 0.0; // x = shift + pos (- neg)
        bool mirrored = false; // x = shift - pos (upper-bounded, no lower)
    };
    std::vector<VarMap> vmap(n);
    int cols = 0;
    std::vector<LpRow> extra_rows;
    for (int i = 0; i < n; ++i) {
        const double lo = problem.lower[i];
        const double hi = problem.upper[i];
        if (lo > hi + kLpTolerance) return {LpStatus::Infeasible, {}, 0.0, 0};
        if (std::isfinite(lo)) {
            vmap[i].pos = cols++;
            vmap[i].shift = lo;
            if (std::isfinite(hi)) {
                LpRow row;
                row.coeffs.assign(n, 0.0);
                row.coeffs[i] = 1.0;
                row.rhs = hi;
                row.relation = '<';
                extra_rows.push_back(std::move(row));
            }
        } else if (std::isfinite(hi)) {
            vmap[i].pos = cols++;
            vmap[i].shift = hi;
            vmap[i].mirrored = true;
        } else {
            vmap[i].pos = cols++;
            vmap[i].neg = cols++;
        }
    }
    std::vector<LpRow> all_rows = problem.rows;
    for (auto& r : extra_rows) all_rows.push_back(std::move(r));
    const int m = static_cast<int>(all_rows.size());

    // count slack columns
    int slack_count = 0;
    for (const auto& row : all_rows)
        if (row.relation != '=') ++slack_count;
    const int first_slack = cols;
    cols += slack_count;
    const int first_artificial = cols;
    cols += m; // at most one artificial per row; unused ones stay disabled

    detail::SimplexTableau tab(m, cols);
    std::vector<char> is_artificial(cols, 0);
    int artificials_used = 0;

    for (int r = 0; r < m; ++r) {
        const auto& row = all_rows[r];
        if (static_cast<int>(row.coeffs.size()) != n)
            throw ValidationError("LP row width must equal the variable count");
        double b = row.rhs;
        for (int i = 0; i < n; ++i) {
            const double a = row.coeffs[i];
            if (a == 0.0) continue;
            b -= a * vmap[i].shift;
            const double sign = vmap[i].mirrored ? -1.0 : 1.0;
            tab.at(r, vmap[i].pos) += sign * a;
            if (vmap[i].neg >= 0) tab.at(r, vmap[i].neg) -= a;
        }
        tab.rhs(r) = b;
    }

    int slack_cursor = first_slack;
    for (int r = 0; r < m; ++r) {
        const auto& row = all_rows[r];
        double slack_sign = 0.0;
        if (row.relation == '<')
            slack_sign = 1.0;
        else if (row.relation == '>')
            slack_sign = -1.0;
        else if (row.relation != '=')
            throw ValidationError("LP relation must be one of '<', '>', '='");
        int slack_col = -1;
        if (slack_sign != 0.0) {
            slack_col = slack_cursor++;
            tab.at(r, slack_col) = slack_sign;
        }
        if (tab.rhs(r) < 0.0) {
            for (int c = 0; c < cols; ++c) tab.at(r, c) = -tab.at(r, c);
            tab.rhs(r) = -tab.rhs(r);
        }
        if (slack_col >= 0 && tab.at(r, slack_col) > 0.5) {
            tab.set_basis(r, slack_col);
        } else {
            const int art = first_artificial + r;
            tab.at(r, art) = 1.0;
            tab.set_basis(r, art);
            is_artificial[art] = 1;
            ++artificials_used;
        }
    }

    LpSolution sol;
    sol.x.assign(n, 0.0);

    // --- phase 1 ----------------------------------------------------------
    std::vector<char> eligible(cols, 1);
    if (artificials_used > 0) {
        Vec phase1_cost(cols, 0.0);
        for (int c = 0; c < cols; ++c)
            if (is_artificial[c]) phase1_cost[c] = 1.0;
        double obj1 = 0.0;
        if (!tab.iterate(phase1_cost, eligible, obj1, sol.iterations))
            throw NumericalError("phase-1 LP reported unbounded");
        if (obj1 > 1e-7) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        // drive surviving artificials out of the basis where possible
        for (int r = 0; r < m; ++r) {
            if (!is_artificial[tab.basis(r)]) continue;
            int pivot_col = -1;
            for (int c = 0; c < first_artificial; ++c)
                if (std::abs(tab.at(r, c)) > 1e-7) {
                    pivot_col = c;
                    break;
                }
            if (pivot_col >= 0) tab.pivot(r, pivot_col);
            // else: redundant row; its artificial stays basic at zero
        }
        for (int c = first_artificial; c < cols; ++c) eligible[c] = 0;
    } else {
        for (int c = first_artificial; c < cols; ++c) eligible[c] = 0;
    }

    // --- phase 2 ----------------------------------------------------------
    Vec cost(cols, 0.0);
    double offset = 0.0;
    for (int i = 0; i < n; ++i) {
        const double c = problem.objective[i];
        offset += c * vmap[i].shift;
        cost[vmap[i].pos] += vmap[i].mirrored ? -c : c;
        if (vmap[i].neg >= 0) cost[vmap[i].neg] -= c;
    }
    double obj2 = 0.0;
    if (!tab.iterate(cost, eligible, obj2, sol.iterations)) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    Vec std_values(cols, 0.0);
    for (int r = 0; r < m; ++r) std_values[tab.basis(r)] = tab.rhs(r);
    for (int i = 0; i < n; ++i) {
        double v = std_values[vmap[i].pos];
        if (vmap[i].mirrored) v = -v;
        if (vmap[i].neg >= 0) v -= std_values[vmap[i].neg];
        sol.x[i] = vmap[i].shift + v;
    }
    sol.objective = obj2 + offset;
    sol.status = LpStatus::Optimal;
    return sol;
}

} // namespace gridmtd
