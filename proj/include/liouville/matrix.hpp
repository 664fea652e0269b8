#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "liouville/errors.hpp"

namespace liouville {

/// Symmetric coefficient matrix A = (a_ij) of a Liouville system, with an
/// optionally attached inverse A^{-1} = (a^{ij}).  Immutable once built;
/// invert() returns a new value carrying the inverse.
class CoefficientMatrix {
public:
    CoefficientMatrix() = default;

    int n() const { return n_; }
    bool has_inverse() const { return !inv_.empty(); }

    double at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    double inv_at(int i, int j) const { return inv_[static_cast<size_t>(i) * n_ + j]; }

    /// Infinity-norm condition estimate ||A||_inf * ||A^{-1}||_inf.
    /// Zero until invert() has run.
    double cond_estimate() const { return cond_; }

    const std::vector<double>& entries() const { return a_; }
    const std::vector<double>& inverse_entries() const { return inv_; }

    double max_abs_entry() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Largest magnitude over entries of A, used to scale sign/zero tests.
    double default_zero_tol() const { return 1e-12 * max_abs_entry(); }

private:
    int n_ = 0;
    std::vector<double> a_;   // row-major, exactly symmetric as stored
    std::vector<double> inv_; // row-major, empty until invert()
    double cond_ = 0.0;

    friend CoefficientMatrix build_matrix(const std::vector<std::vector<double>>&, double);
    friend CoefficientMatrix invert(const CoefficientMatrix&);
};

struct HypothesisFailure {
    std::string condition;    // which clause failed
    std::vector<int> indices; // offending indices, 0-based
    double value = 0.0;       // offending value
};

/// Outcome of the structural hypothesis checks.  failures is empty exactly
/// when every pass flag that was evaluated is true.
struct HypothesisReport {
    bool h1_pass = false;
    bool h2_pass = false;
    bool domination_pass = false; // only meaningful when h1_pass && h2_pass
    std::vector<HypothesisFailure> failures;
};

/// Partition of {0,..,n-1} into the connected components of the off-diagonal
/// adjacency graph.  Each block is ascending; blocks sorted by first member.
struct BlockDecomposition {
    std::vector<std::vector<int>> blocks;
};

/// Builds a CoefficientMatrix from a raw square array.  Entries are
/// symmetrized as (a_ij + a_ji)/2 so the stored matrix is bitwise symmetric.
/// Throws if the input is not square or deviates from symmetry by more than
/// sym_tol * max|raw|.
inline CoefficientMatrix build_matrix(const std::vector<std::vector<double>>& raw,
                                      double sym_tol = 1e-12) {
    const size_t n = raw.size();
    if (n == 0) throw NonSquareError("empty matrix");
    for (const auto& row : raw) {
        if (row.size() != n)
            throw NonSquareError("matrix has " + std::to_string(n) + " rows but a row of length " +
                                 std::to_string(row.size()));
    }
    double max_abs = 0.0;
    for (const auto& row : raw)
        for (double v : row) max_abs = std::max(max_abs, std::abs(v));

    int wi = -1, wj = -1;
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double d = std::abs(raw[i][j] - raw[j][i]);
            if (d > worst) {
                worst = d;
                wi = static_cast<int>(i);
                wj = static_cast<int>(j);
            }
        }
    if (worst > sym_tol * max_abs)
        throw AsymmetricBeyondToleranceError(
            "entries (" + std::to_string(wi) + "," + std::to_string(wj) + ") and (" +
            std::to_string(wj) + "," + std::to_string(wi) + ") differ by " + std::to_string(worst));

    CoefficientMatrix m;
    m.n_ = static_cast<int>(n);
    m.a_.resize(n * n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) m.a_[i * n + j] = (raw[i][j] + raw[j][i]) / 2.0;
    return m;
}

/// Gauss-Jordan elimination with partial pivoting.  Throws SingularMatrixError
/// when a pivot falls below 1e-13 * max|a_ij|.  The returned matrix carries
/// inverse_entries and cond_estimate = ||A||_inf * ||A^{-1}||_inf.
inline CoefficientMatrix invert(const CoefficientMatrix& a) {
    const int n = a.n();
    const double pivot_floor = 1e-13 * a.max_abs_entry();

    std::vector<double> work = a.entries();
    std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;

    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(work[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(work[static_cast<size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best <= pivot_floor)
            throw SingularMatrixError("pivot " + std::to_string(best) + " below threshold at column " +
                                      std::to_string(col));
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(work[static_cast<size_t>(piv) * n + j], work[static_cast<size_t>(col) * n + j]);
                std::swap(inv[static_cast<size_t>(piv) * n + j], inv[static_cast<size_t>(col) * n + j]);
            }
        }
        const double d = work[static_cast<size_t>(col) * n + col];
        for (int j = 0; j < n; ++j) {
            work[static_cast<size_t>(col) * n + j] /= d;
            inv[static_cast<size_t>(col) * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work[static_cast<size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                work[static_cast<size_t>(r) * n + j] -= f * work[static_cast<size_t>(col) * n + j];
                inv[static_cast<size_t>(r) * n + j] -= f * inv[static_cast<size_t>(col) * n + j];
            }
        }
    }

    auto inf_norm = [n](const std::vector<double>& m) {
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) row += std::abs(m[static_cast<size_t>(i) * n + j]);
            best = std::max(best, row);
        }
        return best;
    };

    CoefficientMatrix out = a;
    out.inv_ = std::move(inv);
    out.cond_ = inf_norm(out.a_) * inf_norm(out.inv_);
    return out;
}

/// True iff the graph on {0,..,n-1} with an edge {i,j} whenever i != j and
/// |a_ij| > zero_tol is connected.  n = 1 counts as irreducible.
inline bool is_irreducible(const CoefficientMatrix& a, double zero_tol) {
    const int n = a.n();
    if (n == 1) return true;
    std::vector<char> seen(n, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    size_t head = 0;
    while (head < queue.size()) {
        const int i = queue[head++];
        for (int j = 0; j < n; ++j) {
            if (j == i || seen[j]) continue;
            if (std::abs(a.at(i, j)) > zero_tol) {
                seen[j] = 1;
                queue.push_back(j);
            }
        }
    }
    return queue.size() == static_cast<size_t>(n);
}

inline bool is_irreducible(const CoefficientMatrix& a) {
    return is_irreducible(a, a.default_zero_tol());
}

/// Connected components of the off-diagonal adjacency graph.
inline BlockDecomposition decompose_blocks(const CoefficientMatrix& a, double zero_tol) {
    const int n = a.n();
    std::vector<char> seen(n, 0);
    BlockDecomposition out;
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        std::vector<int> comp{start};
        seen[start] = 1;
        size_t head = 0;
        while (head < comp.size()) {
            const int i = comp[head++];
            for (int j = 0; j < n; ++j) {
                if (j == i || seen[j]) continue;
                if (std::abs(a.at(i, j)) > zero_tol) {
                    seen[j] = 1;
                    comp.push_back(j);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.blocks.push_back(std::move(comp));
    }
    // outer loop visits vertices in ascending order, so blocks are already
    // sorted by smallest member
    return out;
}

inline BlockDecomposition decompose_blocks(const CoefficientMatrix& a) {
    return decompose_blocks(a, a.default_zero_tol());
}

/// (H1): A symmetric (by construction), nonnegative, irreducible, invertible.
/// Failures are recorded as data; nothing throws.
inline HypothesisReport check_h1(const CoefficientMatrix& a, double zero_tol) {
    HypothesisReport rep;
    rep.h1_pass = true;
    const int n = a.n();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            if (a.at(i, j) < -zero_tol) {
                rep.h1_pass = false;
                rep.failures.push_back({"nonnegativity", {i, j}, a.at(i, j)});
            }
    if (!is_irreducible(a, zero_tol)) {
        rep.h1_pass = false;
        rep.failures.push_back({"irreducibility", {}, 0.0});
    }
    try {
        (void)invert(a);
    } catch (const SingularMatrixError&) {
        rep.h1_pass = false;
        rep.failures.push_back({"invertibility", {}, 0.0});
    }
    return rep;
}

inline HypothesisReport check_h1(const CoefficientMatrix& a) {
    return check_h1(a, a.default_zero_tol());
}

/// (H2): a^{ii} <= 0, a^{ij} >= 0 for i != j, and every row sum of A^{-1}
/// is >= 0, all up to zero_tol.  Throws SingularMatrixError when A has no
/// inverse.  For n = 2 these conditions amount to max(a_11, a_22) <= a_12
/// with a nonzero determinant; the check always goes through the inverse.
inline HypothesisReport check_h2(const CoefficientMatrix& a, double zero_tol) {
    const CoefficientMatrix ai = a.has_inverse() ? a : invert(a);
    const int n = ai.n();
    HypothesisReport rep;
    rep.h2_pass = true;
    for (int i = 0; i < n; ++i) {
        if (ai.inv_at(i, i) > zero_tol) {
            rep.h2_pass = false;
            rep.failures.push_back({"inverse_diagonal_nonpositive", {i, i}, ai.inv_at(i, i)});
        }
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            row_sum += ai.inv_at(i, j);
            if (j != i && ai.inv_at(i, j) < -zero_tol) {
                rep.h2_pass = false;
                rep.failures.push_back({"inverse_offdiagonal_nonnegative", {i, j}, ai.inv_at(i, j)});
            }
        }
        if (row_sum < -zero_tol) {
            rep.h2_pass = false;
            rep.failures.push_back({"inverse_row_sum_nonnegative", {i}, row_sum});
        }
    }
    return rep;
}

inline HypothesisReport check_h2(const CoefficientMatrix& a) {
    return check_h2(a, a.default_zero_tol());
}

inline bool passes_h1_h2(const CoefficientMatrix& a) {
    if (!check_h1(a).h1_pass) return false;
    try {
        return check_h2(a).h2_pass;
    } catch (const SingularMatrixError&) {
        return false;
    }
}

/// Consistency consequence of (H1)+(H2): a_ij > 0 and max(a_ii, a_jj) <= a_ij
/// for every i != j.  A failure here indicates a tolerance bug upstream, not a
/// mathematical outcome.  Throws unless (H1) and (H2) both hold.
inline HypothesisReport check_diagonal_domination(const CoefficientMatrix& a) {
    if (!passes_h1_h2(a))
        throw HypothesesNotSatisfiedError("check_diagonal_domination requires a matrix passing (H1) and (H2)");
    HypothesisReport rep;
    rep.h1_pass = true;
    rep.h2_pass = true;
    rep.domination_pass = true;
    const int n = a.n();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (!(a.at(i, j) > 0.0)) {
                rep.domination_pass = false;
                rep.failures.push_back({"offdiagonal_positive", {i, j}, a.at(i, j)});
            }
            const double diag_max = std::max(a.at(i, i), a.at(j, j));
            if (!(diag_max <= a.at(i, j))) {
                rep.domination_pass = false;
                rep.failures.push_back({"diagonal_dominated_by_offdiagonal", {i, j}, diag_max});
            }
        }
    return rep;
}

/// Combined report used by the CLI: h1, then h2 and the domination
/// consequence when reachable.
inline HypothesisReport full_hypothesis_report(const CoefficientMatrix& a, double zero_tol) {
    HypothesisReport rep = check_h1(a, zero_tol);
    try {
        HypothesisReport h2 = check_h2(a, zero_tol);
        rep.h2_pass = h2.h2_pass;
        rep.failures.insert(rep.failures.end(), h2.failures.begin(), h2.failures.end());
    } catch (const SingularMatrixError&) {
        rep.h2_pass = false;
        rep.failures.push_back({"inverse_unavailable", {}, 0.0});
    }
    if (rep.h1_pass && rep.h2_pass) {
        HypothesisReport l = check_diagonal_domination(a);
        rep.domination_pass = l.domination_pass;
        rep.failures.insert(rep.failures.end(), l.failures.begin(), l.failures.end());
    }
    return rep;
}

inline HypothesisReport full_hypothesis_report(const CoefficientMatrix& a) {
    return full_hypothesis_report(a, a.default_zero_tol());
}

} // namespace liouville
