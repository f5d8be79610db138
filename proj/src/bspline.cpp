#include "sumext/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sumext {

void gauss_legendre(int npts, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<size_t>(npts), 0.0);
    weights.assign(static_cast<size_t>(npts), 0.0);
    // Newton iteration on Legendre roots; plenty for npts <= 32.
    for (int i = 0; i < (npts + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= npts; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = npts * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<size_t>(i)] = -x;
        nodes[static_cast<size_t>(npts - 1 - i)] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<size_t>(i)] = w;
        weights[static_cast<size_t>(npts - 1 - i)] = w;
    }
}

BSplineBasis::BSplineBasis(int degree, const std::vector<double>& breakpts,
                           const std::vector<int>& mult) {
    if (breakpts.size() < 2 || breakpts.size() != mult.size())
        throw std::invalid_argument("BSplineBasis: bad breakpoint/multiplicity lists");
    degree_ = degree;
    breaks_ = breakpts;
    knots_.clear();
    for (size_t i = 0; i < breakpts.size(); ++i) {
        int r = (i == 0 || i + 1 == breakpts.size()) ? degree + 1
                                                     : std::min(mult[i], degree + 1);
        for (int k = 0; k < r; ++k) knots_.push_back(breakpts[i]);
    }
    nbasis_ = static_cast<int>(knots_.size()) - degree_ - 1;
    if (nbasis_ < degree_ + 1)
        throw std::invalid_argument("BSplineBasis: too few knots");
}

int BSplineBasis::span(double x) const {
    // last i with knots[i] <= x < knots[i+1]; x == b handled from the left
    int lo = degree_, hi = nbasis_;  // valid spans in [degree, nbasis-1]
    if (x >= knots_[static_cast<size_t>(nbasis_)]) return nbasis_ - 1;
    if (x <= knots_[static_cast<size_t>(degree_)]) return degree_;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (knots_[static_cast<size_t>(mid)] <= x) lo = mid; else hi = mid;
    }
    return lo;
}

// DersBasisFuns (The NURBS Book, A2.3)
void BSplineBasis::eval(double x, int nder, int& first, Mat& ders) const {
    const int p = degree_;
    const int i = span(x);
    first = i - p;
    const int nd = std::min(nder, p);
    ders = Mat::Zero(nder + 1, p + 1);

    Mat ndu(p + 1, p + 1);
    std::vector<double> left(static_cast<size_t>(p + 1)), right(static_cast<size_t>(p + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<size_t>(j)] = x - knots_[static_cast<size_t>(i + 1 - j)];
        right[static_cast<size_t>(j)] = knots_[static_cast<size_t>(i + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(j - r)];
            double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[static_cast<size_t>(r + 1)] * temp;
            saved = left[static_cast<size_t>(j - r)] * temp;
        }
        ndu(j, j) = saved;
    }
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

    Mat a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a(0, 0) = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            int rk = r - k, pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            int j1 = (rk >= -1) ? 1 : -rk;
            int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d += a(s2, k) * ndu(r, pk);
            }
            ders(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double r = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) ders(k, j) *= r;
        r *= (p - k);
    }
}

RowVec BSplineBasis::row(double x, int k) const {
    RowVec out = RowVec::Zero(nbasis_);
    if (k > degree_) return out;
    int first;
    Mat ders;
    eval(x, k, first, ders);
    for (int j = 0; j <= degree_; ++j) {
        int idx = first + j;
        if (idx >= 0 && idx < nbasis_) out[idx] = ders(k, j);
    }
    return out;
}

TensorBasis::TensorBasis(BSplineBasis ax0) : n_(1) {
    ax_[0] = std::move(ax0);
    size_ = ax_[0].size();
}

TensorBasis::TensorBasis(BSplineBasis ax0, BSplineBasis ax1) : n_(2) {
    ax_[0] = std::move(ax0);
    ax_[1] = std::move(ax1);
    size_ = ax_[0].size() * ax_[1].size();
}

Box TensorBasis::domain() const {
    Vec lo(n_), hi(n_);
    for (int i = 0; i < n_; ++i) {
        lo[i] = ax_[static_cast<size_t>(i)].a();
        hi[i] = ax_[static_cast<size_t>(i)].b();
    }
    return Box(lo, hi);
}

RowVec TensorBasis::row(const Vec& x, const MultiIndex& alpha) const {
    if (n_ == 1) return ax_[0].row(x[0], alpha[0]);
    RowVec r0 = ax_[0].row(x[0], alpha[0]);
    RowVec r1 = ax_[1].row(x[1], alpha[1]);
    RowVec out(size_);
    int n1 = ax_[1].size();
    for (int i = 0; i < ax_[0].size(); ++i)
        for (int j = 0; j < n1; ++j) out[i * n1 + j] = r0[i] * r1[j];
    return out;
}

void TensorBasis::quad_cells(int per_axis, const Box& clip,
                             const std::function<void(const Vec&, double)>& fn) const {
    std::vector<double> gx, gw;
    gauss_legendre(per_axis, gx, gw);

    auto spans = [&](int axisidx, std::vector<std::pair<double, double>>& cells) {
        const std::vector<double>& br = ax_[static_cast<size_t>(axisidx)].breakpoints();
        cells.clear();
        for (size_t i = 0; i + 1 < br.size(); ++i) {
            double lo = std::max(br[i], clip.lo[axisidx]);
            double hi = std::min(br[i + 1], clip.hi[axisidx]);
            if (hi - lo > 1e-14) cells.emplace_back(lo, hi);
        }
    };

    std::vector<std::pair<double, double>> c0, c1;
    spans(0, c0);
    if (n_ == 1) {
        Vec pt(1);
        for (const auto& [lo, hi] : c0) {
            double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
            for (int q = 0; q < per_axis; ++q) {
                pt[0] = c + h * gx[static_cast<size_t>(q)];
                fn(pt, h * gw[static_cast<size_t>(q)]);
            }
        }
        return;
    }
    spans(1, c1);
    Vec pt(2);
    for (const auto& [lo0, hi0] : c0) {
        double h0 = 0.5 * (hi0 - lo0), m0 = 0.5 * (hi0 + lo0);
        for (const auto& [lo1, hi1] : c1) {
            double h1 = 0.5 * (hi1 - lo1), m1 = 0.5 * (hi1 + lo1);
            for (int q0 = 0; q0 < per_axis; ++q0)
                for (int q1 = 0; q1 < per_axis; ++q1) {
                    pt[0] = m0 + h0 * gx[static_cast<size_t>(q0)];
                    pt[1] = m1 + h1 * gx[static_cast<size_t>(q1)];
                    fn(pt, h0 * gw[static_cast<size_t>(q0)] * h1 * gw[static_cast<size_t>(q1)]);
                }
        }
    }
}

Jet Field::jet(const Vec& y, int m) const {
    Vec t = taylor(y, m - 1);
    return Jet(m, dims(), t);
}

Vec PolyField::taylor(const Vec& y, int order) const {
    const int n = P_.n;
    const std::vector<MultiIndex> out_set = index_set_deg(order, n);
    Vec t = Vec::Zero(static_cast<Eigen::Index>(out_set.size()));
    Vec u = y - base_;
    for (size_t i = 0; i < out_set.size(); ++i) {
        if (out_set[i].order() > P_.m - 1) continue;
        t[static_cast<Eigen::Index>(i)] =
            jet_deriv(P_, out_set[i], u) / mi_factorial(out_set[i]);
    }
    return t;
}

Vec SplineField::taylor_inside(const Vec& y, int order) const {
    const int n = basis_.dim();
    const std::vector<MultiIndex> out_set = index_set_deg(order, n);
    Vec t(static_cast<Eigen::Index>(out_set.size()));
    for (size_t i = 0; i < out_set.size(); ++i)
        t[static_cast<Eigen::Index>(i)] =
            basis_.row(y, out_set[i]).dot(u_) / mi_factorial(out_set[i]);
    return t;
}

Vec SplineField::taylor(const Vec& y, int order) const {
    const int n = basis_.dim();
    Box dom = basis_.domain();
    Vec yc = y.cwiseMax(dom.lo).cwiseMin(dom.hi);
    if ((yc - y).lpNorm<Eigen::Infinity>() == 0.0) return taylor_inside(y, order);

    // Outside the knot interval the function continues as the degree m-1
    // Taylor polynomial taken at the nearest boundary point (the tails carry
    // zero m-th order seminorm).
    Vec tb = taylor_inside(yc, m_ - 1);
    Jet J(m_, n, tb);  // coefficients about yc
    PolyField tail(J, yc);
    return tail.taylor(y, order);
}

Vec taylor_mul(const Vec& a, const Vec& b, int order, int n) {
    const std::vector<MultiIndex> S = index_set_deg(order, n);
    Vec out = Vec::Zero(a.size());
    for (size_t i = 0; i < S.size(); ++i)
        for (size_t j = 0; j < S.size(); ++j) {
            if (S[i].order() + S[j].order() > order) continue;
            int k = index_of(S, S[i] + S[j]);
            out[k] += a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(j)];
        }
    return out;
}

Vec taylor_recip(const Vec& a, int order, int n) {
    const std::vector<MultiIndex> S = index_set_deg(order, n);
    double a0 = a[0];
    if (std::abs(a0) < 1e-300) throw std::domain_error("taylor_recip: zero constant term");
    // 1/(a0 + h) = (1/a0) sum_k (-h/a0)^k with h the zero-constant remainder
    Vec h = a;
    h[0] = 0.0;
    Vec out = Vec::Zero(a.size());
    out[0] = 1.0;
    Vec hk = out;  // h^0
    double sign = 1.0;
    double a0k = 1.0;
    Vec acc = Vec::Zero(a.size());
    for (int k = 0; k <= order; ++k) {
        acc += sign / a0k * hk;
        hk = taylor_mul(hk, h, order, n);
        sign = -sign;
        a0k *= a0;
    }
    return acc / a0;
}

}  // namespace sumext
