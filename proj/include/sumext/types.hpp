#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace sumext {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// Axis-parallel box with half-open extent (lo, hi] per coordinate.
struct Box {
    Vec lo, hi;

    Box() = default;
    Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size())
            throw std::invalid_argument("Box: dimension mismatch");
    }

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vec& x) const {
        for (int i = 0; i < dim(); ++i)
            if (!(lo[i] < x[i] && x[i] <= hi[i])) return false;
        return true;
    }

    Vec center() const { return 0.5 * (lo + hi); }
    Vec sides() const { return hi - lo; }
    double diam() const { return (hi - lo).maxCoeff(); }  // ell-infinity metric

    // gamma Q: same center, sides scaled by gamma.
    Box dilate(double gamma) const {
        Vec c = center(), h = 0.5 * gamma * sides();
        return Box(c - h, c + h);
    }

    // Closed-set intersection test (used for neighbor relations).
    bool touches(const Box& other) const {
        for (int i = 0; i < dim(); ++i)
            if (hi[i] < other.lo[i] || other.hi[i] < lo[i]) return false;
        return true;
    }

    bool intersects_open(const Box& other) const {
        for (int i = 0; i < dim(); ++i)
            if (hi[i] <= other.lo[i] || other.hi[i] <= lo[i]) return false;
        return true;
    }

    Box intersect(const Box& other) const {
        Vec l = lo.cwiseMax(other.lo), h = hi.cwiseMin(other.hi);
        for (int i = 0; i < dim(); ++i)
            if (l[i] > h[i]) { h[i] = l[i]; }  // empty, collapsed
        return Box(l, h);
    }

    Box hull(const Box& other) const {
        return Box(lo.cwiseMin(other.lo), hi.cwiseMax(other.hi));
    }
};

inline Box unit_box(int n) {
    return Box(Vec::Zero(n), Vec::Ones(n));
}

inline double inf_dist(const Vec& a, const Vec& b) {
    return (a - b).lpNorm<Eigen::Infinity>();
}

// dist(Q, Q') in the ell-infinity metric between closed boxes.
inline double box_dist(const Box& a, const Box& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double gap = std::max(std::max(b.lo[i] - a.hi[i], a.lo[i] - b.hi[i]), 0.0);
        d = std::max(d, gap);
    }
    return d;
}

}  // namespace sumext
