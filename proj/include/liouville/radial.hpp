#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "liouville/energy.hpp"
#include "liouville/errors.hpp"
#include "liouville/matrix.hpp"

namespace liouville {

/// Exponent cap for every exp() evaluated by the radial integrator.  Initial
/// heights above this are rejected outright.
inline constexpr double kExpClamp = 40.0;

/// Relative Pohozaev budget every converged solution is expected to meet:
/// |Lambda_I(sigma)| <= kPohozaevTol * 4 * sum(sigma).
inline constexpr double kPohozaevTol = 1e-3;

struct InitialHeights {
    std::vector<double> alpha; // u_i(0); alpha_n = 0 under the B-sweep convention

    InitialHeights() = default;
    explicit InitialHeights(std::vector<double> a) : alpha(std::move(a)) {
        for (double x : alpha)
            if (!std::isfinite(x)) throw PreconditionError("initial heights must be finite");
    }

    /// B-sweep point: free head components, last height pinned to zero.
    static InitialHeights b_sweep(std::vector<double> head) {
        head.push_back(0.0);
        return InitialHeights(std::move(head));
    }
};

struct RadialOptions {
    double r0 = 1e-4;    // start radius for the Taylor launch
    double r_max = 1e8;  // giving up radius; hitting it marks the run Divergent
    double atol = 1e-12;
    double rtol = 1e-9;  // also the relative tail-mass threshold for stopping
    double delta = 0.05; // integrate until min_i m_i(r) >= 2 + delta
    double h0 = 1e-2;    // initial step in t = log r
};

/// Grid-sampled radial profiles with running masses.  sigma_infinity is set
/// only when the tail criterion was met before r_max.
struct RadialSolution {
    enum class Status { Converged, Divergent };

    CoefficientMatrix A;
    std::vector<double> alpha;
    RadialOptions opts;

    std::vector<double> r_grid;                    // strictly increasing, starts at r0
    std::vector<std::vector<double>> u;            // [i][k]
    std::vector<std::vector<double>> sigma_running; // [i][k]
    std::vector<std::vector<double>> m_running;    // [i][k]

    Status status = Status::Divergent;
    std::optional<MassVector> sigma_infinity;
    std::vector<double> tail_constants; // c_i in u_i(r) ~ -m_i log r + c_i
    double pohozaev_residual = std::numeric_limits<double>::quiet_NaN();
    double stop_radius = 0.0;
    size_t steps_taken = 0;

    bool converged() const { return status == Status::Converged; }
};

/// Second-order Taylor launch at r0, consistent with u_i'(0) = 0:
///   u_i(r0) = alpha_i - S_i r0^2/4,  u_i'(r0) = -S_i r0/2,
/// where S_i = sum_j a_ij e^{alpha_j}.
struct TaylorState {
    std::vector<double> u;      // u_i(r0)
    std::vector<double> du_dr;  // u_i'(r0)
};

inline TaylorState taylor_start(const CoefficientMatrix& a, const std::vector<double>& alpha,
                                double r0 = 1e-4) {
    const int n = a.n();
    TaylorState s;
    s.u.resize(n);
    s.du_dr.resize(n);
    for (int i = 0; i < n; ++i) {
        double S = 0.0;
        for (int j = 0; j < n; ++j) S += a.at(i, j) * std::exp(alpha[j]);
        s.u[i] = alpha[i] - S * r0 * r0 / 4.0;
        s.du_dr[i] = -S * r0 / 2.0;
    }
    return s;
}

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dp54 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b(5th) - b(4th), for the embedded error estimate
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Radial system in t = log r.  State layout: [u_0..u_{n-1}, w_0..w_{n-1},
/// sigma_0..sigma_{n-1}] with w = du/dt and sigma_i(r) = int_0^r e^{u_i} s ds.
class RadialField {
public:
    RadialField(const CoefficientMatrix& a) : a_(a), n_(a.n()) {}

    void operator()(double t, const std::vector<double>& y, std::vector<double>& dy) const {
        for (int j = 0; j < n_; ++j)
            exp_[j] = std::exp(std::min(y[j] + 2.0 * t, kExpClamp));
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_; ++j) s += a_.at(i, j) * exp_[j];
            dy[i] = y[n_ + i];
            dy[n_ + i] = -s;
            dy[2 * n_ + i] = exp_[i];
        }
    }

    int n() const { return n_; }

private:
    const CoefficientMatrix& a_;
    int n_;
    mutable std::vector<double> exp_ = std::vector<double>(n_, 0.0);
};

} // namespace detail

/// Power-law tail closure at truncation radius R: with current exponents m_i,
/// the mass beyond R is e^{u_i(R)} R^2 / (m_i - 2); folding it back into sigma
/// changes m = A sigma, so the closure is iterated to a fixed point.
inline MassVector extrapolate_masses(const RadialSolution& sol, double R) {
    if (sol.r_grid.empty()) throw PreconditionError("extrapolate_masses: empty solution");
    // last grid point at or below R
    auto it = std::upper_bound(sol.r_grid.begin(), sol.r_grid.end(), R);
    if (it == sol.r_grid.begin()) throw PreconditionError("extrapolate_masses: R below grid start");
    const size_t k = static_cast<size_t>(it - sol.r_grid.begin()) - 1;
    const double r = sol.r_grid[k];
    const int n = sol.A.n();

    const double m_floor = 2.0 + sol.opts.delta;
    for (int i = 0; i < n; ++i)
        if (!(sol.m_running[i][k] > m_floor))
            throw PreconditionError("extrapolate_masses requires m_i(R) > 2 + delta, got m_" +
                                    std::to_string(i + 1) + " = " + std::to_string(sol.m_running[i][k]));

    std::vector<double> sigma_R(n), eu(n), m(n), sigma(n);
    for (int i = 0; i < n; ++i) {
        sigma_R[i] = sol.sigma_running[i][k];
        eu[i] = std::exp(sol.u[i][k]);
        m[i] = sol.m_running[i][k];
        sigma[i] = sigma_R[i];
    }

    for (int iter = 0; iter < 100; ++iter) {
        double change = 0.0;
        std::vector<double> next(n);
        for (int i = 0; i < n; ++i) {
            if (!(m[i] > 2.0))
                throw NoConvergenceError("tail exponent m_" + std::to_string(i + 1) +
                                         " fell to " + std::to_string(m[i]) + " during extrapolation");
            next[i] = sigma_R[i] + eu[i] * r * r / (m[i] - 2.0);
            change = std::max(change, std::abs(next[i] - sigma[i]));
        }
        sigma = std::move(next);
        for (int i = 0; i < n; ++i) {
            m[i] = 0.0;
            for (int j = 0; j < n; ++j) m[i] += sol.A.at(i, j) * sigma[j];
        }
        if (change < 1e-12) return MassVector(sol.A, sigma);
    }
    throw NoConvergenceError("tail fixed point did not settle in 100 iterations");
}

/// Integrates the radial Liouville system from prescribed heights alpha using
/// an adaptive Dormand-Prince 5(4) pair in t = log r.  Stops once every
/// component satisfies m_i(r) >= 2 + delta with relative tail mass below rtol,
/// then closes the masses by extrapolate_masses; hitting r_max first marks the
/// solution Divergent (data, not an error).
inline RadialSolution integrate_radial(const CoefficientMatrix& a, const std::vector<double>& alpha,
                                       const RadialOptions& opts = {}) {
    const int n = a.n();
    if (static_cast<int>(alpha.size()) != n)
        throw PreconditionError("alpha length does not match matrix size");
    if (!check_h1(a).h1_pass)
        throw HypothesesNotSatisfiedError("integrate_radial requires (H1)");
    for (double ai : alpha) {
        if (!std::isfinite(ai)) throw PreconditionError("alpha entries must be finite");
        if (ai > kExpClamp)
            throw OverflowInExponentialError("initial height " + std::to_string(ai) +
                                             " exceeds the safe maximum " + std::to_string(kExpClamp));
    }

    RadialSolution sol;
    sol.A = a;
    sol.alpha = alpha;
    sol.opts = opts;
    sol.u.assign(n, {});
    sol.sigma_running.assign(n, {});
    sol.m_running.assign(n, {});

    const double t_end = std::log(opts.r_max);
    double t = std::log(opts.r0);

    // state from the Taylor launch; w = r u'(r), sigma ~ e^{alpha} r^2/2
    const TaylorState ts = taylor_start(a, alpha, opts.r0);
    std::vector<double> y(3 * n);
    for (int i = 0; i < n; ++i) {
        y[i] = ts.u[i];
        y[n + i] = opts.r0 * ts.du_dr[i];
        y[2 * n + i] = std::exp(alpha[i]) * opts.r0 * opts.r0 / 2.0;
    }

    detail::RadialField f(a);
    std::vector<double> k1(3 * n), k2(3 * n), k3(3 * n), k4(3 * n), k5(3 * n), k6(3 * n),
        k7(3 * n), ytmp(3 * n), ynew(3 * n);

    auto record = [&](double tt, const std::vector<double>& yy) {
        const double r = std::exp(tt);
        sol.r_grid.push_back(r);
        for (int i = 0; i < n; ++i) {
            sol.u[i].push_back(yy[i]);
            sol.sigma_running[i].push_back(yy[2 * n + i]);
            double m = 0.0;
            for (int j = 0; j < n; ++j) m += a.at(i, j) * yy[2 * n + j];
            sol.m_running[i].push_back(m);
        }
    };
    record(t, y);

    // true once min_i m_i >= 2 + delta and tail_i / sigma_i < rtol for all i,
    // with tail_i = sigma_i'(t) / (m_i - 2)
    auto tail_settled = [&](double tt, const std::vector<double>& yy) {
        for (int i = 0; i < n; ++i) {
            double m = 0.0;
            for (int j = 0; j < n; ++j) m += a.at(i, j) * yy[2 * n + j];
            if (!(m >= 2.0 + opts.delta)) return false;
            const double rate = std::exp(std::min(yy[i] + 2.0 * tt, kExpClamp));
            if (!(rate / (m - 2.0) < opts.rtol * yy[2 * n + i])) return false;
        }
        return true;
    };

    using D = detail::Dp54;
    double h = opts.h0;
    bool converged = false;
    f(t, y, k1);

    while (t < t_end) {
        h = std::min(h, t_end - t);
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw StepUnderflowError("step size underflow at t = " + std::to_string(t));

        for (int i = 0; i < 3 * n; ++i) ytmp[i] = y[i] + h * D::a21 * k1[i];
        f(t + D::c2 * h, ytmp, k2);
        for (int i = 0; i < 3 * n; ++i) ytmp[i] = y[i] + h * (D::a31 * k1[i] + D::a32 * k2[i]);
        f(t + D::c3 * h, ytmp, k3);
        for (int i = 0; i < 3 * n; ++i)
            ytmp[i] = y[i] + h * (D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]);
        f(t + D::c4 * h, ytmp, k4);
        for (int i = 0; i < 3 * n; ++i)
            ytmp[i] = y[i] + h * (D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] + D::a54 * k4[i]);
        f(t + D::c5 * h, ytmp, k5);
        for (int i = 0; i < 3 * n; ++i)
            ytmp[i] = y[i] + h * (D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] +
                                  D::a64 * k4[i] + D::a65 * k5[i]);
        f(t + h, ytmp, k6);
        for (int i = 0; i < 3 * n; ++i)
            ynew[i] = y[i] + h * (D::b1 * k1[i] + D::b3 * k3[i] + D::b4 * k4[i] + D::b5 * k5[i] +
                                  D::b6 * k6[i]);
        f(t + h, ynew, k7);

        double err = 0.0;
        for (int i = 0; i < 3 * n; ++i) {
            const double e = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] +
                                  D::e6 * k6[i] + D::e7 * k7[i]);
            const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / (3 * n));

        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7); // FSAL
            record(t, y);
            ++sol.steps_taken;
            if (tail_settled(t, y)) {
                converged = true;
                break;
            }
        }
        const double factor = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }

    sol.stop_radius = sol.r_grid.back();
    if (converged) {
        sol.status = RadialSolution::Status::Converged;
        sol.sigma_infinity = extrapolate_masses(sol, sol.stop_radius);
        const MassVector& mv = *sol.sigma_infinity;
        sol.tail_constants.resize(n);
        const size_t last = sol.r_grid.size() - 1;
        for (int i = 0; i < n; ++i)
            sol.tail_constants[i] = sol.u[i][last] + mv.m[i] * std::log(sol.stop_radius);
        sol.pohozaev_residual = std::abs(lambda_I(a, mv.sigma, kScaleEntire));
    }
    return sol;
}

inline RadialSolution integrate_radial(const CoefficientMatrix& a, const InitialHeights& heights,
                                       const RadialOptions& opts = {}) {
    return integrate_radial(a, heights.alpha, opts);
}

/// Summary checks on a converged solution: Pohozaev residual |Lambda_I(sigma)|
/// at scale 4, the smallest decay exponent, and membership in E.
struct EntireSolutionReport {
    double pohozaev_residual = 0.0;
    double m_min = 0.0;
    bool subset_positivity = false; // Lambda_J(sigma) > 0 for all proper J
    bool in_E = false;
};

inline EntireSolutionReport verify_entire_solution(const CoefficientMatrix& a,
                                                   const RadialSolution& sol, double tol = 1e-3) {
    if (!sol.sigma_infinity)
        throw PreconditionError("verify_entire_solution requires a converged solution");
    const MassVector& mv = *sol.sigma_infinity;
    EntireSolutionReport rep;
    rep.pohozaev_residual = std::abs(lambda_I(a, mv.sigma, kScaleEntire));
    rep.m_min = mv.min_m();
    rep.subset_positivity = true;
    const uint32_t full = (1u << a.n()) - 1u;
    for (uint32_t mask = 1; mask < full; ++mask)
        if (!(detail::lambda_mask(a, mv.sigma, mask, kScaleEntire) > 0.0)) {
            rep.subset_positivity = false;
            break;
        }
    rep.in_E = in_E(a, mv, tol);
    return rep;
}

struct SweepEntry {
    enum class Status { Converged, Divergent, Error };
    std::vector<double> alpha;
    Status status = Status::Error;
    std::optional<MassVector> sigma;
    double pohozaev_residual = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    // pairs of converged grid points whose masses agree within 1e-6 (diagnostic)
    std::vector<std::pair<int, int>> near_duplicates;
};

/// Runs integrate_radial over a finite grid of initial heights.  Per-point
/// failures are recorded inline; the sweep itself never throws.  With jobs > 1
/// the grid is partitioned across worker threads; output order is the grid
/// order either way.
inline SweepResult sweep_initial_values(const CoefficientMatrix& a,
                                        const std::vector<std::vector<double>>& grid,
                                        const RadialOptions& opts = {}, int jobs = 1) {
    SweepResult out;
    out.entries.resize(grid.size());

    auto run_point = [&](size_t idx) {
        SweepEntry& e = out.entries[idx];
        e.alpha = grid[idx];
        try {
            RadialSolution sol = integrate_radial(a, grid[idx], opts);
            if (sol.converged()) {
                e.status = SweepEntry::Status::Converged;
                e.sigma = sol.sigma_infinity;
                e.pohozaev_residual = sol.pohozaev_residual;
            } else {
                e.status = SweepEntry::Status::Divergent;
            }
        } catch (const Error& err) {
            e.status = SweepEntry::Status::Error;
            e.error = err.what();
        }
    };

    jobs = std::max(1, jobs);
    if (jobs == 1 || grid.size() <= 1) {
        for (size_t i = 0; i < grid.size(); ++i) run_point(i);
    } else {
        std::vector<std::thread> workers;
        const int nw = std::min<int>(jobs, static_cast<int>(grid.size()));
        workers.reserve(nw);
        for (int w = 0; w < nw; ++w)
            workers.emplace_back([&, w] {
                for (size_t i = static_cast<size_t>(w); i < grid.size(); i += static_cast<size_t>(nw))
                    run_point(i);
            });
        for (auto& th : workers) th.join();
    }

    for (size_t i = 0; i < out.entries.size(); ++i) {
        if (!out.entries[i].sigma) continue;
        for (size_t j = i + 1; j < out.entries.size(); ++j) {
            if (!out.entries[j].sigma) continue;
            double d = 0.0;
            for (int c = 0; c < a.n(); ++c)
                d = std::max(d, std::abs(out.entries[i].sigma->sigma[c] -
                                         out.entries[j].sigma->sigma[c]));
            if (d < 1e-6) out.near_duplicates.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return out;
}

/// The eps-family of initial data: the first l heights are prescribed, the
/// remaining n - l start at log(eps).  eps = 1 reduces to a plain run.
inline RadialSolution epsilon_family(const CoefficientMatrix& a, int l,
                                     const std::vector<double>& alpha_head, double eps,
                                     const RadialOptions& opts = {}) {
    const int n = a.n();
    if (l < 1 || l >= n) throw PreconditionError("epsilon_family requires 1 <= l < n");
    if (static_cast<int>(alpha_head.size()) != l)
        throw PreconditionError("alpha_head length must equal l");
    if (!(eps > 0.0) || eps > 1.0) throw PreconditionError("epsilon_family requires eps in (0, 1]");
    std::vector<double> alpha = alpha_head;
    alpha.resize(n, std::log(eps));
    return integrate_radial(a, alpha, opts);
}

} // namespace liouville
