#include "sumext/pou.hpp"

#include <cmath>
#include <stdexcept>

#include "sumext/jet.hpp"

namespace sumext {

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// S_N(t) = sum_k binom(N+k,k) binom(2N+1,N-k) (-1)^k t^{N+1+k}; S(0)=0,
// S(1)=1 with N vanishing derivatives at both ends. Degree 2N+1.
Vec smoothstep_coeffs(int N) {
    Vec c = Vec::Zero(2 * N + 2);
    for (int k = 0; k <= N; ++k)
        c[N + 1 + k] = binom(N + k, k) * binom(2 * N + 1, N - k) * ((k % 2) ? -1.0 : 1.0);
    return c;
}

// g(u) = poly(t0 + s*u) truncated at order `ord`
Vec poly_compose_affine(const Vec& poly, double t0, double s, int ord) {
    Vec out = Vec::Zero(ord + 1);
    for (int k = 0; k < poly.size(); ++k) {
        if (poly[k] == 0.0) continue;
        double tp = 1.0;  // t0^{k-j} built downward
        // j runs 0..min(k, ord)
        for (int j = std::min(k, ord); j >= 0; --j) {
            double term = poly[k] * binom(k, j) * std::pow(t0, k - j) * std::pow(s, j);
            out[j] += term;
            (void)tp;
        }
    }
    return out;
}

}  // namespace

TensorRamp::TensorRamp(Box inner, double collar, int order)
    : inner_(std::move(inner)), collar_(collar), order_(order),
      step_(smoothstep_coeffs(order)) {
    if (collar_ <= 0.0) throw std::invalid_argument("TensorRamp: collar must be positive");
}

Box TensorRamp::support() const {
    return Box(inner_.lo.array() - collar_, inner_.hi.array() + collar_);
}

bool TensorRamp::is_zero(const Vec& y) const {
    for (int d = 0; d < inner_.dim(); ++d)
        if (y[d] <= inner_.lo[d] - collar_ || y[d] >= inner_.hi[d] + collar_) return true;
    return false;
}

bool TensorRamp::is_one(const Vec& y) const {
    for (int d = 0; d < inner_.dim(); ++d)
        if (y[d] < inner_.lo[d] || y[d] > inner_.hi[d]) return false;
    return true;
}

Vec TensorRamp::axis_taylor(int axis, double y0, int ord) const {
    const double lo = inner_.lo[axis], hi = inner_.hi[axis], c = collar_;
    Vec out = Vec::Zero(ord + 1);
    if (y0 <= lo - c || y0 >= hi + c) return out;             // zero piece
    if (y0 >= lo && y0 <= hi) { out[0] = 1.0; return out; }   // flat piece
    if (y0 < lo) {
        double t0 = (y0 - (lo - c)) / c;
        return poly_compose_affine(step_, t0, 1.0 / c, ord);  // rising ramp
    }
    double t0 = ((hi + c) - y0) / c;
    return poly_compose_affine(step_, t0, -1.0 / c, ord);     // falling ramp
}

Vec TensorRamp::taylor(const Vec& y, int ord) const {
    const int n = inner_.dim();
    const std::vector<MultiIndex> S = index_set_deg(ord, n);
    Vec t0 = axis_taylor(0, y[0], ord);
    if (n == 1) {
        Vec out(static_cast<Eigen::Index>(S.size()));
        for (size_t i = 0; i < S.size(); ++i) out[static_cast<Eigen::Index>(i)] = t0[S[i][0]];
        return out;
    }
    Vec t1 = axis_taylor(1, y[1], ord);
    Vec out(static_cast<Eigen::Index>(S.size()));
    for (size_t i = 0; i < S.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = t0[S[i][0]] * t1[S[i][1]];
    return out;
}

BumpSystem::BumpSystem(std::vector<Box> cubes, int smooth_order, double support_factor) {
    if (cubes.empty()) throw std::invalid_argument("BumpSystem: no cubes");
    n_ = cubes[0].dim();
    for (Box& b : cubes) {
        double side = b.sides()[0];
        ramps_.emplace_back(b, 0.5 * (support_factor - 1.0) * side, smooth_order);
    }
}

Vec BumpSystem::theta_taylor(int i, const Vec& y, int ord) const {
    const std::vector<MultiIndex> S = index_set_deg(ord, n_);
    Vec zero = Vec::Zero(static_cast<Eigen::Index>(S.size()));
    if (!in_support(i, y)) return zero;
    Vec total = zero;
    for (int j = 0; j < size(); ++j)
        if (in_support(j, y)) total += phi_taylor(j, y, ord);
    Vec inv = taylor_recip(total, ord, n_);
    return taylor_mul(phi_taylor(i, y, ord), inv, ord, n_);
}

BumpSystem build_pou(const std::vector<Box>& cubes, int m) {
    return BumpSystem(cubes, m, 1.1);
}

GlueField::GlueField(FieldPtr F, Jet P, Vec Pbase, const Box& Q, double eta, int order)
    : F_(std::move(F)), P_(std::move(P)), Pbase_(std::move(Pbase)), Q_(Q),
      theta_(Q, 0.5 * eta * Q.sides()[0], order) {}

Vec GlueField::taylor(const Vec& y, int order) const {
    PolyField pf(P_, Pbase_);
    if (theta_.is_zero(y)) return pf.taylor(y, order);
    Vec tF = F_->taylor(y, order);
    if (theta_.is_one(y)) return tF;
    const int n = Q_.dim();
    Vec th = theta_.taylor(y, order);
    Vec tP = pf.taylor(y, order);
    Vec one_minus = -th;
    one_minus[0] += 1.0;
    return taylor_mul(th, tF, order, n) + taylor_mul(one_minus, tP, order, n);
}

Vec PatchField::taylor(const Vec& y, int order) const {
    const int n = dims();
    const std::vector<MultiIndex> S = index_set_deg(order, n);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(S.size()));
    for (int i = 0; i < bumps_.size(); ++i) {
        if (!bumps_.in_support(i, y)) continue;
        Vec th = bumps_.theta_taylor(i, y, order);
        out += taylor_mul(th, children_[static_cast<size_t>(i)]->taylor(y, order), order, n);
    }
    return out;
}

}  // namespace sumext
