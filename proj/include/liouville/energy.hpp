#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "liouville/errors.hpp"
#include "liouville/matrix.hpp"

namespace liouville {

/// Quadratic-form scale for entire-solution masses: Lambda_J(s) = 4*sum - sAs.
inline constexpr double kScaleEntire = 4.0;
/// Quadratic-form scale for mean-field parameters: Lambda_J(r) = 8*pi*sum - rAr.
inline constexpr double kScaleMeanField = 8.0 * std::numbers::pi;

/// Mass vector sigma with its derived log-decay exponents m = A * sigma.
struct MassVector {
    std::vector<double> sigma;
    std::vector<double> m;

    MassVector() = default;
    MassVector(const CoefficientMatrix& a, std::vector<double> s) : sigma(std::move(s)) {
        const int n = a.n();
        m.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m[i] += a.at(i, j) * sigma[j];
    }

    double total() const {
        double t = 0.0;
        for (double v : sigma) t += v;
        return t;
    }
    double min_m() const {
        double v = std::numeric_limits<double>::infinity();
        for (double x : m) v = std::min(v, x);
        return v;
    }
};

/// Closed surface of genus g (chi = 2 - 2g) or planar domain with g_e holes
/// (chi = 1 - g_e).
struct SurfaceSpec {
    enum class Kind { ClosedSurface, PlanarDomain };
    Kind kind = Kind::ClosedSurface;
    int parameter = 0; // genus or hole count

    static SurfaceSpec closed_surface(int genus) { return {Kind::ClosedSurface, genus}; }
    static SurfaceSpec planar_domain(int holes) { return {Kind::PlanarDomain, holes}; }

    int chi() const {
        return kind == Kind::ClosedSurface ? 2 - 2 * parameter : 1 - parameter;
    }
};

/// A parameter point rho with its position relative to the critical
/// hypersurfaces Gamma_N.
struct RhoPoint {
    enum class Kind { InteriorO, OnGamma, OutsideDomain };

    std::vector<double> rho;
    Kind kind = Kind::OutsideDomain;
    int level = -1;  // the N in O_N or Gamma_N
    double q = std::numeric_limits<double>::quiet_NaN(); // sum(A rho rho) / (8 pi sum rho)
    std::optional<long long> degree; // filled by degree_for_rho when defined
};

namespace detail {

inline double lambda_mask(const CoefficientMatrix& a, const std::vector<double>& v,
                          uint32_t mask, double scale) {
    const int n = a.n();
    double lin = 0.0, quad = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(mask & (1u << i))) continue;
        lin += v[i];
        for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) quad += a.at(i, j) * v[i] * v[j];
    }
    return scale * lin - quad;
}

} // namespace detail

/// Lambda_J(v) = scale * sum_{i in J} v_i - sum_{i,j in J} a_ij v_i v_j.
/// J holds 0-based indices and must be nonempty.
inline double lambda_J(const CoefficientMatrix& a, const std::vector<double>& v,
                       const std::vector<int>& J, double scale) {
    if (J.empty()) throw EmptySubsetError("lambda_J requires a nonempty index set");
    uint32_t mask = 0;
    for (int i : J) mask |= 1u << i;
    return detail::lambda_mask(a, v, mask, scale);
}

/// Full-index form Lambda_I.
inline double lambda_I(const CoefficientMatrix& a, const std::vector<double>& v, double scale) {
    return detail::lambda_mask(a, v, (1u << a.n()) - 1u, scale);
}

/// Membership in Gamma: every rho_i > 0 and Lambda_J(rho) > 0 at the 8*pi
/// scale for every nonempty J, the full index set included (so Gamma here is
/// exactly the region O_0 of existence below the first critical wall).
inline bool in_gamma(const CoefficientMatrix& a, const std::vector<double>& rho) {
    const int n = a.n();
    for (double r : rho)
        if (!(r > 0.0)) throw NonpositiveRhoError("in_gamma requires rho_i > 0");
    const uint32_t full = (1u << n) - 1u;
    for (uint32_t mask = 1; mask <= full; ++mask)
        if (!(detail::lambda_mask(a, rho, mask, kScaleMeanField) > 0.0)) return false;
    return true;
}

/// Locates rho relative to the walls Gamma_N via q = rho.A.rho / (8 pi sum rho):
/// OnGamma(N) when q is within rel_tol of an integer N >= 1, otherwise the open
/// shell O_floor(q).  Negative components classify as OutsideDomain.
inline RhoPoint classify_rho(const CoefficientMatrix& a, const std::vector<double>& rho,
                             double rel_tol = 1e-9) {
    RhoPoint p;
    p.rho = rho;
    double total = 0.0;
    bool negative = false;
    for (double r : rho) {
        total += r;
        if (r < 0.0) negative = true;
    }
    if (negative) {
        p.kind = RhoPoint::Kind::OutsideDomain;
        return p;
    }
    if (!(total > 0.0)) throw ZeroMassError("classify_rho requires sum(rho) > 0");

    double quad = 0.0;
    const int n = a.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) quad += a.at(i, j) * rho[i] * rho[j];
    const double q = quad / (kScaleMeanField * total);
    p.q = q;

    const double nearest = std::round(q);
    if (nearest >= 1.0 && std::abs(q - nearest) <= rel_tol) {
        p.kind = RhoPoint::Kind::OnGamma;
        p.level = static_cast<int>(nearest);
    } else {
        p.kind = RhoPoint::Kind::InteriorO;
        p.level = static_cast<int>(std::floor(q));
    }
    return p;
}

/// Leray-Schauder degree in the shell O_N: 1 for N = 0, otherwise the exact
/// integer prod_{k=1..N} (-chi + k) / N!, evaluated as a product of N
/// consecutive integers (1-chi)..(N-chi) over N! in integer arithmetic.
inline long long degree(const SurfaceSpec& surface, int N) {
    if (N < 0) throw PreconditionError("degree requires N >= 0");
    if (N == 0) return 1;
    const long long chi = surface.chi();
    long long num = 1;
    for (int k = 1; k <= N; ++k) num *= -chi + k;
    long long fact = 1;
    for (int k = 2; k <= N; ++k) fact *= k;
    return num / fact; // exact: N consecutive integers are divisible by N!
}

/// classify_rho plus the degree:  defined on the open shells, absent (with the
/// level recorded) on the critical walls Gamma_N.
inline RhoPoint degree_for_rho(const CoefficientMatrix& a, const std::vector<double>& rho,
                               const SurfaceSpec& surface, double rel_tol = 1e-9) {
    RhoPoint p = classify_rho(a, rho, rel_tol);
    if (p.kind == RhoPoint::Kind::InteriorO) p.degree = degree(surface, p.level);
    return p;
}

/// Membership in the admissible mass set E: all sigma_i > 0, Lambda_I(sigma)
/// vanishes to tol * (4 * sum sigma), and Lambda_J(sigma) > 0 for every proper
/// nonempty J at scale 4.  Exhaustive over the 2^n - 2 proper subsets.
inline bool in_E(const CoefficientMatrix& a, const MassVector& sigma, double tol = 1e-10) {
    const int n = a.n();
    if (n > 20) throw PreconditionError("subset enumeration capped at n = 20");
    for (double s : sigma.sigma)
        if (!(s > 0.0)) return false;
    const double scale_ref = kScaleEntire * sigma.total();
    if (std::abs(lambda_I(a, sigma.sigma, kScaleEntire)) > tol * scale_ref) return false;
    const uint32_t full = (1u << n) - 1u;
    for (uint32_t mask = 1; mask < full; ++mask)
        if (!(detail::lambda_mask(a, sigma.sigma, mask, kScaleEntire) > 0.0)) return false;
    return true;
}

/// Explicit point of E built from xi = A^{-1} * (1,..,1): sigma = 4 xi when
/// every xi_i > 0.  When some xi_i vanish the result is supported on
/// J = {i : xi_i > 0} with Lambda_J(sigma) = 0; sigma is zero off J.
struct EPointResult {
    MassVector sigma;          // full-length, zeros off the support
    std::vector<int> support;  // indices with xi_i > 0, ascending
    bool full_support = false;
};

inline EPointResult construct_E_point(const CoefficientMatrix& a) {
    // n = 1 is the classical scalar equation: the sign conditions on the
    // inverse cannot hold there (a^{11} = 1/a_{11}), and xi > 0 needs only (H1)
    const bool admissible = a.n() == 1 ? check_h1(a).h1_pass : passes_h1_h2(a);
    if (!admissible)
        throw HypothesesNotSatisfiedError("construct_E_point requires (H1) and (H2)");
    const CoefficientMatrix ai = a.has_inverse() ? a : invert(a);
    const int n = ai.n();
    std::vector<double> xi(n, 0.0);
    double xi_max = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) xi[i] += ai.inv_at(i, j);
        xi_max = std::max(xi_max, std::abs(xi[i]));
    }
    // all xi_i = 0 would contradict invertibility
    if (!(xi_max > 0.0)) std::abort();

    const double zero_floor = 1e-12 * xi_max;
    EPointResult out;
    std::vector<double> sigma(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (xi[i] > zero_floor) {
            sigma[i] = 4.0 * xi[i];
            out.support.push_back(i);
        }
    }
    out.sigma = MassVector(a, std::move(sigma));
    out.full_support = (out.support.size() == static_cast<size_t>(n));
    return out;
}

} // namespace liouville
