#pragma once

#include <vector>

#include "sumext/bspline.hpp"
#include "sumext/types.hpp"

namespace sumext {

// Tensor-product bump: 1 on `inner`, smoothstep ramp of class C^order across
// a collar of width `collar` per side, 0 outside.
class TensorRamp {
public:
    TensorRamp() = default;
    TensorRamp(Box inner, double collar, int order);

    const Box& inner() const { return inner_; }
    Box support() const;
    bool is_zero(const Vec& y) const;
    bool is_one(const Vec& y) const;
    // Taylor coefficients about y (canonical index_set_deg(ord, n) layout).
    Vec taylor(const Vec& y, int ord) const;
    double value(const Vec& y) const { return taylor(y, 0)[0]; }

private:
    Box inner_;
    double collar_ = 0.0;
    int order_ = 1;
    Vec step_;  // smoothstep coefficients, degree 2*order+1

    // 1d ramp coefficients about y0 (length ord+1); piece-exact
    Vec axis_taylor(int axis, double y0, int ord) const;
};

// Partition of unity subordinate to {1.1 Q_i}: theta_i = phi_i / sum_j phi_j
// with phi_i a tensor smoothstep bump equal to 1 on Q_i.
class BumpSystem {
public:
    BumpSystem() = default;
    BumpSystem(std::vector<Box> cubes, int smooth_order, double support_factor = 1.1);

    int size() const { return static_cast<int>(ramps_.size()); }
    int dims() const { return n_; }
    const Box& cube(int i) const { return ramps_[static_cast<size_t>(i)].inner(); }
    Box support(int i) const { return ramps_[static_cast<size_t>(i)].support(); }
    bool in_support(int i, const Vec& y) const {
        return !ramps_[static_cast<size_t>(i)].is_zero(y);
    }

    Vec phi_taylor(int i, const Vec& y, int ord) const {
        return ramps_[static_cast<size_t>(i)].taylor(y, ord);
    }
    Vec theta_taylor(int i, const Vec& y, int ord) const;
    double theta(int i, const Vec& y) const { return theta_taylor(i, y, 0)[0]; }

private:
    int n_ = 1;
    std::vector<TensorRamp> ramps_;
};

class CZTree;
// Bumps for the tree's cubes; requires good geometry (checked by the caller
// via geometry_audit).
BumpSystem build_pou(const std::vector<Box>& cubes, int m);

// theta*F + (1-theta)*P with theta = 1 on Q and supported in (1+eta)Q.
class GlueField : public Field {
public:
    GlueField(FieldPtr F, Jet P, Vec Pbase, const Box& Q, double eta, int order);
    int dims() const override { return Q_.dim(); }
    Vec taylor(const Vec& y, int order) const override;

private:
    FieldPtr F_;
    Jet P_;
    Vec Pbase_;
    Box Q_;
    TensorRamp theta_;
};

// sum_i theta_i * F_i over the bump system's cubes.
class PatchField : public Field {
public:
    PatchField(BumpSystem bumps, std::vector<FieldPtr> children)
        : bumps_(std::move(bumps)), children_(std::move(children)) {}
    int dims() const override { return bumps_.dims(); }
    Vec taylor(const Vec& y, int order) const override;
    const BumpSystem& bumps() const { return bumps_; }
    const std::vector<FieldPtr>& children() const { return children_; }

private:
    BumpSystem bumps_;
    std::vector<FieldPtr> children_;
};

}  // namespace sumext
