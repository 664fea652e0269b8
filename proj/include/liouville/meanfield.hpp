#pragma once

#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "liouville/energy.hpp"
#include "liouville/errors.hpp"
#include "liouville/fft.hpp"
#include "liouville/matrix.hpp"

namespace liouville {

/// Uniform periodic grid on the unit flat torus.  K points per side, spacing
/// 1/K, quadrature weight 1/K^2; total measure is exactly 1.
struct TorusGrid {
    int K = 64;

    double spacing() const { return 1.0 / K; }
    double weight() const { return 1.0 / (static_cast<double>(K) * K); }
    size_t nodes() const { return static_cast<size_t>(K) * K; }
    bool valid() const { return K >= 2 && (K & (K - 1)) == 0; }
};

/// Scalar field sampled on a TorusGrid, row-major with x fastest.
struct TorusField {
    int K = 0;
    std::vector<double> values;

    TorusField() = default;
    explicit TorusField(int k, double fill = 0.0)
        : K(k), values(static_cast<size_t>(k) * k, fill) {}

    double& at(int ix, int iy) { return values[static_cast<size_t>(iy) * K + ix]; }
    double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * K + ix]; }

    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    bool zero_mean() const {
        const double m = max_abs();
        return std::abs(mean()) <= 1e-12 * (m > 0.0 ? m : 1.0);
    }
    void project_zero_mean() {
        const double m = mean();
        for (double& v : values) v -= m;
    }
};

inline double max_abs_diff(const TorusField& a, const TorusField& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

/// Weight function h given as a constant plus a finite cosine series,
/// h(x, y) = c + sum amp * cos(2 pi (kx x + ky y)); C^1 and easy to keep
/// positive by construction.
struct HarmonicProfile {
    struct CosTerm {
        int kx = 0, ky = 0;
        double amp = 0.0;
    };
    double constant = 1.0;
    std::vector<CosTerm> cos_terms;

    TorusField evaluate(const TorusGrid& grid) const {
        TorusField f(grid.K, constant);
        for (const CosTerm& term : cos_terms)
            for (int iy = 0; iy < grid.K; ++iy)
                for (int ix = 0; ix < grid.K; ++ix) {
                    const double phase = 2.0 * std::numbers::pi *
                                         (term.kx * (static_cast<double>(ix) / grid.K) +
                                          term.ky * (static_cast<double>(iy) / grid.K));
                    f.at(ix, iy) += term.amp * std::cos(phase);
                }
        return f;
    }
};

/// Spectral Laplacian: Fourier multiplier -4 pi^2 |k|^2 on the flat torus.
/// The mean is removed before the transform; constants are annihilated exactly
/// and their rounding noise never reaches the |k|^2-weighted modes.
inline TorusField laplacian(const TorusField& f) {
    const int K = f.K;
    std::vector<double> centered = f.values;
    const double m = f.mean();
    if (m != 0.0)
        for (double& v : centered) v -= m;
    auto F = detail::fft2_forward(centered, K);
    for (int iy = 0; iy < K; ++iy) {
        const int ky = detail::signed_freq(iy, K);
        for (int ix = 0; ix < K; ++ix) {
            const int kx = detail::signed_freq(ix, K);
            const double mult =
                -4.0 * std::numbers::pi * std::numbers::pi * (static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
            F[static_cast<size_t>(iy) * K + ix] *= mult;
        }
    }
    TorusField out(K);
    out.values = detail::fft2_inverse_real(std::move(F), K);
    return out;
}

/// Spectral inverse with the zero mode pinned to 0.  The input must be
/// zero-mean; laplacian(inverse_laplacian(f)) returns f to machine precision.
inline TorusField inverse_laplacian(const TorusField& f) {
    if (!f.zero_mean())
        throw NonzeroMeanError("inverse_laplacian requires a zero-mean field, mean = " +
                               std::to_string(f.mean()));
    const int K = f.K;
    auto F = detail::fft2_forward(f.values, K);
    F[0] = 0.0;
    for (int iy = 0; iy < K; ++iy) {
        const int ky = detail::signed_freq(iy, K);
        for (int ix = 0; ix < K; ++ix) {
            if (ix == 0 && iy == 0) continue;
            const int kx = detail::signed_freq(ix, K);
            const double mult =
                -4.0 * std::numbers::pi * std::numbers::pi * (static_cast<double>(kx) * kx + static_cast<double>(ky) * ky);
            F[static_cast<size_t>(iy) * K + ix] /= mult;
        }
    }
    TorusField out(K);
    out.values = detail::fft2_inverse_real(std::move(F), K);
    return out;
}

/// Mean-field system data on the unit torus.  forcing, when nonempty, is an
/// extra source added to each equation (used for manufactured solutions).
struct MeanFieldProblem {
    CoefficientMatrix A;
    std::vector<double> rho;
    std::vector<TorusField> h;
    TorusGrid grid;
    std::vector<TorusField> forcing;

    MeanFieldProblem(CoefficientMatrix a, std::vector<double> rho_in, std::vector<TorusField> h_in,
                     TorusGrid g, std::vector<TorusField> forcing_in = {})
        : A(std::move(a)), rho(std::move(rho_in)), h(std::move(h_in)), grid(g),
          forcing(std::move(forcing_in)) {
        if (!grid.valid()) throw PreconditionError("grid size K must be a power of two >= 2");
        const int n = A.n();
        if (static_cast<int>(rho.size()) != n || static_cast<int>(h.size()) != n)
            throw PreconditionError("rho and h must have one entry per equation");
        if (!forcing.empty() && static_cast<int>(forcing.size()) != n)
            throw PreconditionError("forcing, when given, needs one field per equation");
        for (int i = 0; i < n; ++i) {
            for (double v : h[i].values)
                if (!(v > 0.0))
                    throw PreconditionError("h_" + std::to_string(i + 1) +
                                            " must be strictly positive on the grid");
        }
    }

    int n() const { return A.n(); }
};

namespace detail {

/// Q_j = grid quadrature of h_j e^{u_j}; throws if it ever fails to be positive.
inline std::vector<double> quadratures(const MeanFieldProblem& p, const std::vector<TorusField>& u) {
    std::vector<double> Q(p.n());
    for (int j = 0; j < p.n(); ++j) {
        double s = 0.0;
        for (size_t idx = 0; idx < u[j].values.size(); ++idx)
            s += p.h[j].values[idx] * std::exp(u[j].values[idx]);
        Q[j] = s * p.grid.weight();
        if (!(Q[j] > 0.0))
            throw Error("quadrature of h_" + std::to_string(j + 1) + " e^{u} is not positive");
    }
    return Q;
}

/// The coupling term F_i = sum_j a_ij rho_j (h_j e^{u_j}/Q_j - 1) (+ forcing).
inline std::vector<TorusField> coupling(const MeanFieldProblem& p, const std::vector<TorusField>& u,
                                        const std::vector<double>& Q) {
    const int n = p.n();
    std::vector<TorusField> F(n, TorusField(p.grid.K));
    for (int i = 0; i < n; ++i) {
        for (size_t idx = 0; idx < F[i].values.size(); ++idx) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += p.A.at(i, j) * p.rho[j] *
                     (p.h[j].values[idx] * std::exp(u[j].values[idx]) / Q[j] - 1.0);
            F[i].values[idx] = s;
            if (!p.forcing.empty()) F[i].values[idx] += p.forcing[i].values[idx];
        }
    }
    return F;
}

} // namespace detail

/// r_i = laplacian(u_i) + sum_j a_ij rho_j (h_j e^{u_j}/Q_j - 1) (+ forcing).
/// Each component is zero-mean by the divergence structure; deviations beyond
/// 1e-10 indicate a broken transform and are reported as errors.
inline std::vector<TorusField> residual(const MeanFieldProblem& p, const std::vector<TorusField>& u) {
    const auto Q = detail::quadratures(p, u);
    auto r = detail::coupling(p, u, Q);
    for (int i = 0; i < p.n(); ++i) {
        const TorusField lap = laplacian(u[i]);
        for (size_t idx = 0; idx < r[i].values.size(); ++idx) r[i].values[idx] += lap.values[idx];
        if (std::abs(r[i].mean()) > 1e-10)
            throw Error("residual component " + std::to_string(i + 1) + " lost its zero mean");
    }
    return r;
}

inline double residual_norm(const MeanFieldProblem& p, const std::vector<TorusField>& u) {
    double m = 0.0;
    for (const TorusField& r : residual(p, u)) m = std::max(m, r.max_abs());
    return m;
}

/// Phi_rho(u) = (1/2) sum_ij a^{ij} int grad u_i . grad u_j
///            - sum_j rho_j log int h_j e^{u_j}.
/// The Dirichlet part is evaluated spectrally (Parseval), the log terms by
/// grid quadrature.  The abstract's extra term sum rho_i int u_i vanishes
/// identically on zero-mean fields, which is required here.
inline double phi_functional(const MeanFieldProblem& p, const std::vector<TorusField>& u) {
    const int n = p.n();
    for (int i = 0; i < n; ++i)
        if (!u[i].zero_mean()) throw NonzeroMeanError("phi_functional requires zero-mean fields");
    const CoefficientMatrix ai = p.A.has_inverse() ? p.A : invert(p.A);
    const int K = p.grid.K;

    std::vector<std::vector<std::complex<double>>> spectra(n);
    for (int i = 0; i < n; ++i) spectra[i] = detail::fft2_forward(u[i].values, K);

    const double spec_norm = 1.0 / (static_cast<double>(K) * K);
    double dirichlet = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (ai.inv_at(i, j) == 0.0) continue;
            double pairing = 0.0;
            for (int iy = 0; iy < K; ++iy) {
                const int ky = detail::signed_freq(iy, K);
                for (int ix = 0; ix < K; ++ix) {
                    const int kx = detail::signed_freq(ix, K);
                    const double ksq = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
                    if (ksq == 0.0) continue;
                    const auto& ui = spectra[i][static_cast<size_t>(iy) * K + ix];
                    const auto& uj = spectra[j][static_cast<size_t>(iy) * K + ix];
                    pairing += 4.0 * std::numbers::pi * std::numbers::pi * ksq *
                               (ui.real() * uj.real() + ui.imag() * uj.imag());
                }
            }
            dirichlet += ai.inv_at(i, j) * pairing * spec_norm * spec_norm;
        }

    double logs = 0.0;
    const auto Q = detail::quadratures(p, u);
    for (int j = 0; j < n; ++j) logs += p.rho[j] * std::log(Q[j]);
    return 0.5 * dirichlet - logs;
}

/// Directional derivative of Phi_rho at u in direction w (both zero-mean):
/// sum_ij a^{ij} int grad u_i . grad w_j - sum_j rho_j <h_j e^{u_j} w_j> / Q_j.
inline double phi_directional_derivative(const MeanFieldProblem& p, const std::vector<TorusField>& u,
                                         const std::vector<TorusField>& w) {
    const int n = p.n();
    const CoefficientMatrix ai = p.A.has_inverse() ? p.A : invert(p.A);
    const int K = p.grid.K;
    std::vector<std::vector<std::complex<double>>> su(n), sw(n);
    for (int i = 0; i < n; ++i) {
        su[i] = detail::fft2_forward(u[i].values, K);
        sw[i] = detail::fft2_forward(w[i].values, K);
    }
    const double spec_norm = 1.0 / (static_cast<double>(K) * K);
    double dir = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (ai.inv_at(i, j) == 0.0) continue;
            double pairing = 0.0;
            for (int iy = 0; iy < K; ++iy) {
                const int ky = detail::signed_freq(iy, K);
                for (int ix = 0; ix < K; ++ix) {
                    const int kx = detail::signed_freq(ix, K);
                    const double ksq = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
                    if (ksq == 0.0) continue;
                    const auto& a = su[i][static_cast<size_t>(iy) * K + ix];
                    const auto& b = sw[j][static_cast<size_t>(iy) * K + ix];
                    pairing += 4.0 * std::numbers::pi * std::numbers::pi * ksq *
                               (a.real() * b.real() + a.imag() * b.imag());
                }
            }
            dir += ai.inv_at(i, j) * pairing * spec_norm * spec_norm;
        }
    const auto Q = detail::quadratures(p, u);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (size_t idx = 0; idx < w[j].values.size(); ++idx)
            s += p.h[j].values[idx] * std::exp(u[j].values[idx]) * w[j].values[idx];
        dir -= p.rho[j] * s * p.grid.weight() / Q[j];
    }
    return dir;
}

struct MeanFieldSolveOptions {
    double theta = 0.5; // Picard damping
    int max_iter = 5000;
    double tol = 1e-8;      // infinity-norm residual target
    bool track_phi = false; // evaluate Phi along the iteration (descent diagnostic)
    std::vector<TorusField> initial; // warm start, zeros when empty
};

struct MeanFieldSolution {
    std::vector<TorusField> u;
    double residual_norm = std::numeric_limits<double>::infinity();
    double phi_value = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
    int phi_increases = 0;    // descent violations seen while track_phi was on
    bool inside_O0 = false;
};

/// Damped Picard iteration on the compact map u -> -Delta^{-1}(coupling):
/// u_i <- (1 - theta) u_i + theta T_i(u), zero-mean projected each step.
/// Convergence is certified by a fresh residual evaluation, never by the
/// update size.  On max_iter the best iterate seen is returned with
/// converged = false.
inline MeanFieldSolution solve_mean_field(const MeanFieldProblem& p,
                                          const MeanFieldSolveOptions& opts = {}) {
    const int n = p.n();
    MeanFieldSolution out;
    try {
        const RhoPoint cls = classify_rho(p.A, p.rho);
        out.inside_O0 = (cls.kind == RhoPoint::Kind::InteriorO && cls.level == 0);
    } catch (const Error&) {
        out.inside_O0 = false;
    }
    if (!out.inside_O0)
        std::clog << "solve_mean_field: rho is not interior to O_0; the Picard map may not contract\n";

    std::vector<TorusField> u(n, TorusField(p.grid.K));
    if (!opts.initial.empty()) {
        if (static_cast<int>(opts.initial.size()) != n)
            throw PreconditionError("warm start needs one field per equation");
        u = opts.initial;
        for (TorusField& f : u) f.project_zero_mean();
    }
    std::vector<TorusField> best = u;
    double best_norm = residual_norm(p, u);
    double prev_phi = opts.track_phi ? phi_functional(p, u) : 0.0;
    if (best_norm <= opts.tol) {
        out.u = std::move(u);
        out.residual_norm = best_norm;
        out.converged = true;
        out.iterations = 0;
        out.phi_value = phi_functional(p, out.u);
        return out;
    }

    for (int it = 1; it <= opts.max_iter; ++it) {
        const auto Q = detail::quadratures(p, u);
        auto F = detail::coupling(p, u, Q);
        for (int i = 0; i < n; ++i) {
            F[i].project_zero_mean();
            const TorusField T = inverse_laplacian(F[i]);
            for (size_t idx = 0; idx < u[i].values.size(); ++idx)
                u[i].values[idx] = (1.0 - opts.theta) * u[i].values[idx] - opts.theta * T.values[idx];
            u[i].project_zero_mean();
        }

        const double rn = residual_norm(p, u);
        if (rn < best_norm) {
            best_norm = rn;
            best = u;
        }
        if (opts.track_phi) {
            const double phi = phi_functional(p, u);
            if (phi > prev_phi + 1e-12 * std::max(1.0, std::abs(prev_phi))) ++out.phi_increases;
            prev_phi = phi;
        }
        if (rn <= opts.tol) {
            out.u = std::move(u);
            out.residual_norm = rn;
            out.converged = true;
            out.iterations = it;
            out.phi_value = phi_functional(p, out.u);
            return out;
        }
    }

    out.u = std::move(best);
    out.residual_norm = best_norm;
    out.converged = false;
    out.iterations = opts.max_iter;
    out.phi_value = phi_functional(p, out.u);
    return out;
}

/// v_i = u_i - log int h_i e^{u_i}; the gauge in which int h_i e^{v_i} = 1.
inline std::vector<TorusField> normalize_v(const MeanFieldProblem& p,
                                           const std::vector<TorusField>& u) {
    const auto Q = detail::quadratures(p, u);
    std::vector<TorusField> v = u;
    for (int i = 0; i < p.n(); ++i) {
        const double shift = std::log(Q[i]);
        for (double& x : v[i].values) x -= shift;
    }
    return v;
}

} // namespace liouville
