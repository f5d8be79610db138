#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "sumext/jet.hpp"
#include "sumext/types.hpp"

namespace sumext {

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int npts, std::vector<double>& nodes, std::vector<double>& weights);

// Univariate B-spline basis on a clamped knot vector.
class BSplineBasis {
public:
    BSplineBasis() = default;
    // breakpts strictly increasing, breakpts.front()/back() are the interval
    // ends; mult[i] is the knot multiplicity of breakpts[i] (ends are clamped
    // to degree+1 regardless).
    BSplineBasis(int degree, const std::vector<double>& breakpts, const std::vector<int>& mult);

    int degree() const { return degree_; }
    int size() const { return nbasis_; }
    double a() const { return knots_.front(); }
    double b() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& breakpoints() const { return breaks_; }

    // All basis functions and derivatives 0..nder at x in [a,b]: ders(k, j) is
    // the k-th derivative of basis function first+j, j = 0..degree.
    void eval(double x, int nder, int& first, Mat& ders) const;

    // Dense row of k-th derivatives of every basis function at x.
    RowVec row(double x, int k) const;

private:
    int degree_ = 1;
    int nbasis_ = 0;
    std::vector<double> knots_;
    std::vector<double> breaks_;
    int span(double x) const;
};

// Tensor-product basis for n in {1,2}; n = 1 wraps a single axis.
class TensorBasis {
public:
    TensorBasis() = default;
    explicit TensorBasis(BSplineBasis ax0);
    TensorBasis(BSplineBasis ax0, BSplineBasis ax1);

    int dim() const { return n_; }
    int size() const { return size_; }
    const BSplineBasis& axis(int i) const { return ax_[static_cast<size_t>(i)]; }
    Box domain() const;

    // Row of d^alpha over all tensor basis functions at x (inside the domain).
    RowVec row(const Vec& x, const MultiIndex& alpha) const;

    // Tensor quadrature cells from the knot spans; each cell gets per-axis
    // Gauss rule of `per_axis` points. Calls fn(node, weight).
    void quad_cells(int per_axis, const Box& clip,
                    const std::function<void(const Vec&, double)>& fn) const;

private:
    int n_ = 1;
    int size_ = 0;
    std::array<BSplineBasis, 2> ax_;
};

// Evaluable functions with jets: everything the pipeline produces (local
// spline minimizers, polynomials, patched sums, glued cutoffs) implements
// taylor(), returning Taylor coefficients about y up to the given order.
class Field {
public:
    virtual ~Field() = default;
    virtual int dims() const = 0;
    // Taylor coefficients about y, canonical index_set_deg(order, n) layout:
    // F(z) ~= sum_gamma t_gamma (z-y)^gamma.
    virtual Vec taylor(const Vec& y, int order) const = 0;

    double value(const Vec& y) const { return taylor(y, 0)[0]; }
    // Degree m-1 jet at y (coefficients about y).
    Jet jet(const Vec& y, int m) const;
};

using FieldPtr = std::shared_ptr<const Field>;

class PolyField : public Field {
public:
    // P canonical about `base`.
    PolyField(Jet P, Vec base) : P_(std::move(P)), base_(std::move(base)) {}
    int dims() const override { return P_.n; }
    Vec taylor(const Vec& y, int order) const override;

private:
    Jet P_;
    Vec base_;
};

class SplineField : public Field {
public:
    SplineField(TensorBasis basis, Vec coeffs, int m)
        : basis_(std::move(basis)), u_(std::move(coeffs)), m_(m) {}
    int dims() const override { return basis_.dim(); }
    Vec taylor(const Vec& y, int order) const override;

private:
    TensorBasis basis_;
    Vec u_;
    int m_;
    Vec taylor_inside(const Vec& y, int order) const;
};

class ZeroField : public Field {
public:
    explicit ZeroField(int n) : n_(n) {}
    int dims() const override { return n_; }
    Vec taylor(const Vec&, int order) const override {
        return Vec::Zero(static_cast<Eigen::Index>(index_set_deg(order, n_).size()));
    }

private:
    int n_;
};

// c1 * F1 + c2 * F2
class SumField : public Field {
public:
    SumField(FieldPtr f1, double c1, FieldPtr f2, double c2)
        : f1_(std::move(f1)), f2_(std::move(f2)), c1_(c1), c2_(c2) {}
    int dims() const override { return f1_->dims(); }
    Vec taylor(const Vec& y, int order) const override {
        return c1_ * f1_->taylor(y, order) + c2_ * f2_->taylor(y, order);
    }

private:
    FieldPtr f1_, f2_;
    double c1_, c2_;
};

// Truncated Taylor arithmetic (order-capped polynomial coefficients about a
// point): products and reciprocals for partition-of-unity quotients.
Vec taylor_mul(const Vec& a, const Vec& b, int order, int n);
Vec taylor_recip(const Vec& a, int order, int n);

}  // namespace sumext
