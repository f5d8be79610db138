#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sumext/multiindex.hpp"
#include "sumext/types.hpp"

namespace sumext {

// Multi-indices of order <= maxdeg (no m-cap), ascending; used for product
// intermediates and Taylor arithmetic beyond degree m-1.
inline std::vector<MultiIndex> index_set_deg(int maxdeg, int n) {
    std::vector<MultiIndex> out;
    if (n == 1) {
        for (int k = 0; k <= maxdeg; ++k) out.push_back(MultiIndex(1, {k}));
    } else {
        for (int k = 0; k <= maxdeg; ++k)
            for (int i = 0; i <= k; ++i) out.push_back(MultiIndex(2, {i, k - i}));
    }
    std::sort(out.begin(), out.end(), multiindex_less);
    return out;
}

// A polynomial of degree <= m-1 stored as coefficients in the canonical
// index_set(m, n) order. Coefficient semantics are basepoint-free: the vector
// means P(z) = sum c_alpha (z-b)^alpha for whatever basepoint b the call site
// carries. The library keeps all pipeline jets about the origin (b = 0).
struct Jet {
    int m = 1, n = 1;
    Vec c;

    Jet() : c(Vec::Zero(1)) {}
    Jet(int m_, int n_) : m(m_), n(n_) {
        c = Vec::Zero(static_cast<Eigen::Index>(index_set(m, n).size()));
    }
    Jet(int m_, int n_, Vec coeffs) : m(m_), n(n_), c(std::move(coeffs)) {
        if (c.size() != static_cast<Eigen::Index>(index_set(m, n).size()))
            throw std::invalid_argument("Jet: coefficient count does not match (m,n)");
    }

    int dim() const { return static_cast<int>(c.size()); }

    static Jet constant(int m_, int n_, double v) {
        Jet j(m_, n_);
        j.c[0] = v;  // zero multi-index is minimal, hence first
        return j;
    }

    Jet operator+(const Jet& o) const { Jet r = *this; r.c += o.c; return r; }
    Jet operator-(const Jet& o) const { Jet r = *this; r.c -= o.c; return r; }
    Jet operator*(double t) const { Jet r = *this; r.c *= t; return r; }
};

// P(x) with x the displacement from the jet's basepoint.
inline double jet_eval(const Jet& P, const Vec& x) {
    const std::vector<MultiIndex> M = index_set(P.m, P.n);
    double s = 0.0;
    for (size_t i = 0; i < M.size(); ++i)
        s += P.c[static_cast<Eigen::Index>(i)] * mi_pow(M[i], x.data());
    return s;
}

// d^alpha P evaluated at displacement x from the basepoint.
inline double jet_deriv(const Jet& P, const MultiIndex& alpha, const Vec& x) {
    const std::vector<MultiIndex> M = index_set(P.m, P.n);
    double s = 0.0;
    for (size_t i = 0; i < M.size(); ++i) {
        const MultiIndex& beta = M[i];
        if (!alpha.dominated_by(beta)) continue;
        MultiIndex gamma = beta - alpha;
        double fac = mi_factorial(beta) / mi_factorial(gamma);
        s += P.c[static_cast<Eigen::Index>(i)] * fac * mi_pow(gamma, x.data());
    }
    return s;
}

// |P|_{x,delta} = (sum_alpha |d^alpha P(x)|^p delta^{n+(|alpha|-m)p})^{1/p}.
// x is the displacement of the norm point from the jet's basepoint.
inline double jet_norm(const Jet& P, const Vec& x, double delta, double p) {
    if (delta <= 0.0) throw std::domain_error("jet_norm: delta must be positive");
    const std::vector<MultiIndex> M = index_set(P.m, P.n);
    double s = 0.0;
    for (const MultiIndex& alpha : M) {
        double d = std::abs(jet_deriv(P, alpha, x));
        s += std::pow(d, p) * std::pow(delta, P.n + (alpha.order() - P.m) * p);
    }
    return std::pow(s, 1.0 / p);
}

// Row r with r . coeffs = d^alpha P evaluated at displacement x, for P stored
// in canonical coefficients. Lets callers express jet evaluations as linear
// forms over coefficient vectors.
inline RowVec jet_deriv_row(int m, int n, const MultiIndex& alpha, const Vec& x) {
    const std::vector<MultiIndex> M = index_set(m, n);
    RowVec r = RowVec::Zero(static_cast<Eigen::Index>(M.size()));
    for (size_t i = 0; i < M.size(); ++i) {
        const MultiIndex& beta = M[i];
        if (!alpha.dominated_by(beta)) continue;
        MultiIndex gamma = beta - alpha;
        r[static_cast<Eigen::Index>(i)] =
            mi_factorial(beta) / mi_factorial(gamma) * mi_pow(gamma, x.data());
    }
    return r;
}

// Re-expand P (coefficients about x) about x2: the returned coefficients
// satisfy P(z) = sum r_beta (z-x2)^beta. Function values are unchanged.
inline Jet transport(const Jet& P, const Vec& x, const Vec& x2) {
    const std::vector<MultiIndex> M = index_set(P.m, P.n);
    Vec u = x2 - x;
    Jet r(P.m, P.n);
    for (size_t i = 0; i < M.size(); ++i) {
        const MultiIndex& beta = M[i];
        r.c[static_cast<Eigen::Index>(i)] =
            jet_deriv(P, beta, u) / mi_factorial(beta);
    }
    return r;
}

// Truncated product J_x(P*Q): Taylor polynomial of degree <= m-1 of P*Q at
// displacement x, returned in the same frame as the inputs (both jets must
// share one basepoint; x is relative to it).
inline Jet jet_product(const Jet& P, const Jet& Q, const Vec& x) {
    if (P.m != Q.m || P.n != Q.n)
        throw std::invalid_argument("jet_product: mismatched jets");
    const int m = P.m, n = P.n;
    const std::vector<MultiIndex> M = index_set(m, n);
    const std::vector<MultiIndex> Mfull = index_set_deg(2 * (m - 1), n);

    // full product coefficients about the shared basepoint
    Vec e = Vec::Zero(static_cast<Eigen::Index>(Mfull.size()));
    for (size_t i = 0; i < M.size(); ++i)
        for (size_t j = 0; j < M.size(); ++j) {
            MultiIndex g = M[i] + M[j];
            int k = index_of(Mfull, g);
            e[k] += P.c[static_cast<Eigen::Index>(i)] * Q.c[static_cast<Eigen::Index>(j)];
        }

    // Taylor coefficients of PQ about x, truncated to degree m-1
    Jet t(m, n);
    for (size_t bi = 0; bi < M.size(); ++bi) {
        const MultiIndex& beta = M[bi];
        double s = 0.0;
        for (size_t gi = 0; gi < Mfull.size(); ++gi) {
            const MultiIndex& gamma = Mfull[gi];
            if (!beta.dominated_by(gamma)) continue;
            MultiIndex d = gamma - beta;
            double binom = mi_factorial(gamma) / (mi_factorial(beta) * mi_factorial(d));
            s += e[static_cast<Eigen::Index>(gi)] * binom * mi_pow(d, x.data());
        }
        t.c[static_cast<Eigen::Index>(bi)] = s;
    }
    // back to the shared basepoint: transport from x to 0
    return transport(t, x, Vec::Zero(n));
}

// Exact dual rectification (Lemma 3.4 shape): given candidates (P^alpha) for
// alpha in A with derivative matrix near the identity on A x A at x, return
// the matrix B and the combinations Ptilde^alpha = sum_beta B_{alpha beta}
// P^beta with d^beta Ptilde^alpha(x) = delta_{alpha beta} exactly on A.
// Elimination runs in the label order (candidates and A sorted ascending).
inline std::pair<Mat, std::vector<Jet>> rectify_basis(
    const std::vector<Jet>& candidates, const Label& A, const Vec& x) {
    const int k = static_cast<int>(candidates.size());
    if (k != static_cast<int>(A.size()))
        throw std::invalid_argument("rectify_basis: candidate count != |A|");
    if (k == 0) return {Mat(), {}};

    Mat G(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            G(i, j) = jet_deriv(candidates[static_cast<size_t>(i)], A.elems[static_cast<size_t>(j)], x);

    // B G = I via Gaussian elimination without row exchanges (the near
    // triangular structure puts pivots near 1); a small pivot means the
    // candidates are not a basis.
    Mat W = G.transpose();  // solve W B^T = I columnwise
    Mat Bt = Mat::Identity(k, k);
    for (int col = 0; col < k; ++col) {
        double piv = W(col, col);
        if (std::abs(piv) < 1e-10)
            throw std::runtime_error("rectify_basis: degenerate candidates (singular duality system)");
        for (int r = col + 1; r < k; ++r) {
            double f = W(r, col) / piv;
            W.row(r) -= f * W.row(col);
            Bt.row(r) -= f * Bt.row(col);
        }
    }
    for (int col = k - 1; col >= 0; --col) {
        Bt.row(col) /= W(col, col);
        for (int r = col - 1; r >= 0; --r)
            Bt.row(r) -= W(r, col) * Bt.row(col);
        W.col(col).setZero();
        W(col, col) = 1.0;
    }
    Mat B = Bt.transpose();

    std::vector<Jet> rectified;
    rectified.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        Jet p(candidates[0].m, candidates[0].n);
        for (int j = 0; j < k; ++j) p.c += B(i, j) * candidates[static_cast<size_t>(j)].c;
        rectified.push_back(std::move(p));
    }
    return {B, rectified};
}

}  // namespace sumext
