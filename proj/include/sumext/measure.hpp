#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sumext/types.hpp"

namespace sumext {

// One atom of the measure. Infinite weight means an exact-interpolation
// constraint and is a flag, never a large float.
struct Atom {
    Vec x;
    double w = 1.0;
    bool w_inf = false;
    double f = 0.0;
    int id = -1;  // index into the owning measure's value vector
};

// Affine record of the normalization u = (x - offset) / scale. Weights were
// multiplied by scale^{mp-n}; p-th powers of the normalized objective relate
// to raw ones by the factor scale^{n-mp}.
struct Frame {
    int n = 1;
    double scale = 1.0;
    Vec offset;
    double m = 1, p = 2;

    Vec to_normalized(const Vec& raw) const { return (raw - offset) / scale; }
    Vec to_raw(const Vec& u) const { return offset + scale * u; }
    // raw objective^p = value_factor_p * normalized objective^p
    double value_factor_p() const { return std::pow(scale, n - m * p); }
};

struct AtomicMeasure {
    int n = 1;
    std::vector<Atom> atoms;
    Frame frame;

    int size() const { return static_cast<int>(atoms.size()); }
    bool empty() const { return atoms.empty(); }

    Vec values() const {
        Vec f(size());
        for (int i = 0; i < size(); ++i) f[i] = atoms[static_cast<size_t>(i)].f;
        return f;
    }

    bool has_infinite() const {
        for (const Atom& a : atoms) if (a.w_inf) return true;
        return false;
    }

    Box support_hull() const {
        if (atoms.empty()) throw std::runtime_error("support_hull: empty measure");
        Vec lo = atoms[0].x, hi = atoms[0].x;
        for (const Atom& a : atoms) {
            lo = lo.cwiseMin(a.x);
            hi = hi.cwiseMax(a.x);
        }
        return Box(lo, hi);
    }
};

// mu(box): sum of finite weights of atoms in the (half-open) box; +inf if an
// infinite-weight atom lies inside.
inline double mass(const AtomicMeasure& mu, const Box& box) {
    double s = 0.0;
    for (const Atom& a : mu.atoms) {
        if (!box.contains(a.x)) continue;
        if (a.w_inf) return std::numeric_limits<double>::infinity();
        s += a.w;
    }
    return s;
}

// Atoms inside the half-open box; atom ids are preserved so linear forms over
// the parent value vector stay valid.
inline AtomicMeasure restrict(const AtomicMeasure& mu, const Box& box) {
    AtomicMeasure out;
    out.n = mu.n;
    out.frame = mu.frame;
    for (const Atom& a : mu.atoms)
        if (box.contains(a.x)) out.atoms.push_back(a);
    return out;
}

// Every finite weight multiplied by t^p (the L^p(t^p dmu) scaling of the
// K-functional); infinite weights unchanged.
inline AtomicMeasure scale(const AtomicMeasure& mu, double t, double p) {
    if (t <= 0.0) throw std::domain_error("scale: t must be positive");
    AtomicMeasure out = mu;
    for (Atom& a : out.atoms)
        if (!a.w_inf) a.w *= std::pow(t, p);
    return out;
}

struct NormalizeLog {
    std::vector<std::string> merges;
};

// Map raw atoms affinely into (1/10)Q° = (0.45, 0.55]^n, rescale finite
// weights by scale^{mp-n}, merge duplicate locations (sum weights, infinite
// dominates, weight-average values).
inline AtomicMeasure normalize(std::vector<Atom> raw, int n, double m, double p,
                               NormalizeLog* log = nullptr) {
    if (raw.empty()) throw std::invalid_argument("normalize: no atoms");
    for (const Atom& a : raw) {
        if (a.x.size() != n) throw std::invalid_argument("normalize: atom dimension mismatch");
        if (!a.x.allFinite()) throw std::invalid_argument("normalize: non-finite atom location");
        if (!a.w_inf && !(a.w > 0.0)) throw std::invalid_argument("normalize: weight must be positive or inf");
    }

    // merge duplicates first (exact location equality)
    std::vector<Atom> merged;
    for (const Atom& a : raw) {
        bool found = false;
        for (Atom& b : merged) {
            if ((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0) {
                found = true;
                if (a.w_inf && b.w_inf) {
                    if (a.f != b.f)
                        throw std::invalid_argument(
                            "normalize: conflicting values at duplicate infinite-weight location");
                } else if (a.w_inf) {
                    b.w_inf = true; b.w = 0.0; b.f = a.f;
                } else if (!b.w_inf) {
                    double wsum = a.w + b.w;
                    b.f = (b.f * b.w + a.f * a.w) / wsum;
                    b.w = wsum;
                }
                if (log) log->merges.push_back("merged duplicate atom at given location");
                break;
            }
        }
        if (!found) merged.push_back(a);
    }

    Vec lo = merged[0].x, hi = merged[0].x;
    for (const Atom& a : merged) {
        lo = lo.cwiseMin(a.x);
        hi = hi.cwiseMax(a.x);
    }
    double span = (hi - lo).maxCoeff();
    double s = span > 0.0 ? 10.0 * span : 1.0;  // (raw span) -> width 1/10
    Vec center = 0.5 * (lo + hi);
    Vec offset = center - s * Vec::Constant(n, 0.5);

    AtomicMeasure out;
    out.n = n;
    out.frame.n = n;
    out.frame.scale = s;
    out.frame.offset = offset;
    out.frame.m = m;
    out.frame.p = p;
    double wfac = std::pow(s, m * p - n);
    int id = 0;
    for (Atom a : merged) {
        a.x = out.frame.to_normalized(a.x);
        if (!a.w_inf) a.w *= wfac;
        a.id = id++;
        out.atoms.push_back(std::move(a));
    }
    return out;
}

}  // namespace sumext
