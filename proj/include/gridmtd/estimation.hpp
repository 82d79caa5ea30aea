#pragma once

#include <cmath>
#include <vector>

#include "gridmtd/case.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/linalg.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/rng.hpp"
#include "gridmtd/stats.hpp"

namespace gridmtd {

/// Fixed measurement-vector layout: forward branch flows, then reverse
/// branch flows, then bus injections. M = 2L + N.
struct MeasurementLayout {
    int n_buses = 0;
    int n_branches = 0;

    int rows() const { return n_buses + 2 * n_branches; }
    int forward_row(int branch) const { return branch; }
    int reverse_row(int branch) const { return n_branches + branch; }
    int injection_row(int bus) const { return 2 * n_branches + bus; }
};

/// Measurement matrix, noise weights and the calibrated detection
/// threshold for one reactance assignment. Immutable once built; the
/// normal-equation factorization is cached so per-sample estimation and
/// detection stay cheap inside Monte Carlo loops.
class MeasurementModel {
public:
    /// Assemble H = [D Aᵀ; -D Aᵀ; A D Aᵀ] from the current reactances and
    /// calibrate tau so the no-attack alarm rate is alpha. The weighted
    /// residual norm makes r² chi-square with M - (N-1) degrees of
    /// freedom, so tau is the square root of the 1-alpha quantile. The
    /// unweighted variant (homoscedastic noise only) scales the same
    /// quantile by sigma.
    static MeasurementModel build(const Topology& topo, const Vec& reactance, int ref_index,
                                  double sigma, double alpha, bool weighted_residual = true) {
        if (!(sigma > 0.0)) throw ValidationError("noise sigma must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");

        MeasurementModel m;
        m.layout_ = {topo.num_buses(), topo.num_branches()};
        m.ref_index_ = ref_index;
        m.sigma_.assign(m.layout_.rows(), sigma);
        m.alpha_ = alpha;
        m.weighted_ = weighted_residual;

        const int n = topo.num_buses();
        const int big_l = topo.num_branches();
        const int rows = m.layout_.rows();
        m.h_ = Mat(rows, n);
        for (int l = 0; l < big_l; ++l) {
            const double y = 1.0 / reactance[l];
            const int i = topo.from(l);
            const int j = topo.to(l);
            m.h_(m.layout_.forward_row(l), i) = y;
            m.h_(m.layout_.forward_row(l), j) = -y;
            m.h_(m.layout_.reverse_row(l), i) = -y;
            m.h_(m.layout_.reverse_row(l), j) = y;
            m.h_(m.layout_.injection_row(i), i) += y;
            m.h_(m.layout_.injection_row(i), j) -= y;
            m.h_(m.layout_.injection_row(j), j) += y;
            m.h_(m.layout_.injection_row(j), i) -= y;
        }

        // reference column deleted; remaining columns must be independent
        m.h_reduced_ = Mat(rows, n - 1);
        for (int r = 0; r < rows; ++r)
            for (int c = 0, cc = 0; c < n; ++c) {
                if (c == ref_index) continue;
                m.h_reduced_(r, cc++) = m.h_(r, c);
            }

        Mat normal(n - 1, n - 1);
        for (int a = 0; a < n - 1; ++a)
            for (int b = a; b < n - 1; ++b) {
                double acc = 0.0;
                for (int r = 0; r < rows; ++r)
                    acc += m.h_reduced_(r, a) * m.h_reduced_(r, b) / (sigma * sigma);
                normal(a, b) = acc;
                normal(b, a) = acc;
            }
        auto chol = CholeskyFactor::compute(normal);
        if (!chol)
            throw IslandingError("measurement matrix is rank deficient: graph disconnected",
                                 topo.islands(all_live(big_l)));
        m.normal_factor_ = std::move(*chol);

        m.dof_ = rows - (n - 1);
        const double q = chi_square_quantile(1.0 - alpha, m.dof_);
        m.tau_ = weighted_residual ? std::sqrt(q) : sigma * std::sqrt(q);
        return m;
    }

    static MeasurementModel build(const GridCase& grid, const Vec& reactance, double sigma,
                                  double alpha, bool weighted_residual = true) {
        return build(Topology(grid), reactance, grid.reference_index(), sigma, alpha,
                     weighted_residual);
    }

    const MeasurementLayout& layout() const { return layout_; }
    const Mat& h() const { return h_; }
    double tau() const { return tau_; }
    double alpha() const { return alpha_; }
    double sigma(int row) const { return sigma_[row]; }
    int dof() const { return dof_; }
    int reference_index() const { return ref_index_; }
    bool weighted_residual() const { return weighted_; }

    Vec apply_h(const Vec& theta) const { return h_ * theta; }

private:
    friend Vec wls_estimate(const MeasurementModel&, const Vec&);

    MeasurementLayout layout_;
    Mat h_;
    Mat h_reduced_;
    CholeskyFactor normal_factor_;
    Vec sigma_;
    double alpha_ = 0.0;
    double tau_ = 0.0;
    int dof_ = 0;
    int ref_index_ = 0;
    bool weighted_ = true;
};

/// z = H theta + n with independent zero-mean Gaussian noise. The caller
/// supplies the stream, so trials stay reproducible and thread-local.
inline Vec simulate_measurements(const MeasurementModel& model, const Vec& theta, Rng& rng) {
    Vec z = model.apply_h(theta);
    for (int r = 0; r < model.layout().rows(); ++r) z[r] += model.sigma(r) * rng.normal();
    return z;
}

/// Weighted-least-squares angle estimate with the reference pinned to 0.
inline Vec wls_estimate(const MeasurementModel& model, const Vec& z) {
    const int n = model.layout().n_buses;
    const int rows = model.layout().rows();
    Vec rhs(n - 1, 0.0);
    for (int c = 0; c < n - 1; ++c) {
        double acc = 0.0;
        for (int r = 0; r < rows; ++r)
            acc += model.h_reduced_(r, c) * z[r] / (model.sigma_[r] * model.sigma_[r]);
        rhs[c] = acc;
    }
    const Vec reduced = model.normal_factor_.solve(rhs);
    Vec theta(n, 0.0);
    for (int i = 0, k = 0; i < n; ++i)
        if (i != model.reference_index()) theta[i] = reduced[k++];
    return theta;
}

struct BddResult {
    double residual = 0.0;
    bool alarm = false;
};

/// Residual test: estimate the state, measure what the model cannot
/// explain, and alarm when it exceeds tau.
inline BddResult bdd_residual(const MeasurementModel& model, const Vec& z) {
    const Vec theta_hat = wls_estimate(model, z);
    const Vec fitted = model.apply_h(theta_hat);
    double acc = 0.0;
    for (int r = 0; r < model.layout().rows(); ++r) {
        double e = z[r] - fitted[r];
        if (model.weighted_residual()) e /= model.sigma(r);
        acc += e * e;
    }
    BddResult out;
    out.residual = std::sqrt(acc);
    out.alarm = out.residual > model.tau();
    return out;
}

} // namespace gridmtd
