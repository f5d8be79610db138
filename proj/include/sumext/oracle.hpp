#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "sumext/bspline.hpp"
#include "sumext/jet.hpp"
#include "sumext/measure.hpp"
#include "sumext/multiindex.hpp"
#include "sumext/types.hpp"

namespace sumext {

struct OracleConfig {
    double eps_basis = 0.1;   // the collapsed eps_0/C_0 knob, echoed in reports
    int exact_enrich = 16;    // uniform anchor-domain cells added to the exact knot set
    int grid = 512;           // IRLS grid cells per axis, n = 1
    int grid2 = 16;           // IRLS grid cells per axis, n = 2
    double irls_damping = 1e-8;
    int irls_max_iter = 200;
    double irls_tol = 1e-6;
    enum class Path { Auto, Exact, Irls };
    Path path = Path::Auto;

    bool use_exact(int n, double p) const {
        if (path == Path::Exact) return true;
        if (path == Path::Irls) return false;
        return n == 1 && p == 2.0;
    }
};

struct JetConstraint {
    Vec x;
    MultiIndex alpha;
    double target = 0.0;
};

// Residual-row form of a local variational problem:
//   minimize over w:  sum_l nu_l |(Aw w - Gv theta)_l|^p
//   subject to        Cw w = Dv theta.
// theta is the caller's parameter vector; numeric problems use ntheta = 1
// with theta = [1]. Row kinds distinguish measure-weighted (zeta) rows from
// scalar (psi) rows for the M decomposition.
struct RowKind {
    enum T { Psi, Zeta } kind = Psi;
    int atom_gid = -1;   // global atom id for zeta rows
    double atom_w = 0.0; // finite atom weight (nu duplicates it)
};

struct LinearSystem {
    Mat Aw, Gv;
    Vec nu;
    std::vector<RowKind> kinds;
    Mat Cw, Dv;
    std::vector<RowKind> con_kinds;  // zeta bookkeeping for constraint rows
    TensorBasis basis;
    int m = 1, n = 1;
    double p = 2.0;

    int nw() const { return static_cast<int>(Aw.cols()); }
    int ntheta() const { return static_cast<int>(Gv.cols()); }
};

struct SolveMaps {
    Mat W;           // w = W theta
    Mat value_form;  // J(theta) = theta' V theta  (p = 2)
    bool feasible = true;
};

// Exact path (p = 2): one KKT solve, linear in theta.
SolveMaps solve_p2(const LinearSystem& sys);

// Objective sum nu |r|^p at a concrete theta given w.
double objective_at(const LinearSystem& sys, const Vec& w, const Vec& theta);

// General p: iteratively reweighted least squares at a concrete theta.
// Returns the p-th power of the objective.
double solve_irls(const LinearSystem& sys, const Vec& theta, const OracleConfig& cfg,
                  Vec* w_out = nullptr, int* iters_out = nullptr, bool* feas = nullptr);

// Problem assembly -------------------------------------------------------

struct AssemblySpec {
    const AtomicMeasure* mu = nullptr;  // already restricted to the relevant scope
    int m = 1, n = 1;
    double p = 2.0;
    Box dom;                  // integration domain and knot hull
    bool anchor = false;      // add |F - P|^p / delta^{mp} over dom
    double anchor_delta = 1.0;

    int ntheta = 1;
    std::vector<int> fcol;    // theta column of each atom's value; -1 = literal atom.f
    Mat pmap;                 // anchor jet coefficients (about pbase) = pmap * theta
    Vec pbase;
    bool p_in_w = false;      // anchor jet coefficients appended to w instead

    std::vector<JetConstraint> cons;  // numeric-target jet constraints on F
    int enrich = 16;          // uniform knot cells when anchored (exact path)
    bool uniform_grid = false;
    int grid_cells = 64;      // IRLS-path uniform grid
};

LinearSystem assemble(const AssemblySpec& spec);

// Facade ------------------------------------------------------------------

struct NormResult {
    double value = 0.0;    // the J-functional value, i.e. (inf)^{1/p}
    double value_pow = 0.0;
    FieldPtr minimizer;
    bool feasible = true;
    int iterations = 0;
};

// ||f||_{J(mu)} = inf_F { ||F||_{L^{m,p}}^p + sum w_j |F(x_j)-f_j|^p }^{1/p}.
NormResult j_norm(const AtomicMeasure& mu, const Vec& f, int m, double p,
                  const OracleConfig& cfg);

// ||f,P0||_{J_*(mu; dom)} with the anchor |F-P0|^p/delta^{mp} over dom.
NormResult j_norm_with_jet(const AtomicMeasure& mu, const Vec& f, const Jet& P0,
                           const Vec& P0base, double delta, const Box& dom, int m,
                           double p, const OracleConfig& cfg);

// gauge(P) = inf { ||F||_{J(0, mu|_scope)} : J_x F = P }; +inf when the jet
// constraints clash with an infinite atom at x.
double gauge(const Jet& P, const Vec& Pbase, const Vec& x, const AtomicMeasure& mu,
             const Box& scope, int m, double p, const OracleConfig& cfg);

// (A, x, eps, delta)-basis test for sigma_J(x, mu|_scope); condition (iii)
// strengthened to equality-zero for beta > alpha outside A. Returns witness
// jets (coefficients about x) when the test passes.
struct BasisResult {
    bool ok = false;
    std::vector<Jet> witness;  // about x
    std::vector<double> gauges;
};
BasisResult has_basis(const Label& A, const Vec& x, double eps, double delta,
                      const AtomicMeasure& mu, const Box& scope, int m, double p,
                      const OracleConfig& cfg);

// OK predicate for a dyadic cube: short-circuits via the mass criterion, then
// the single-infinite-atom (trace point) rule, then searches monotonic labels
// Abar < A in increasing label order.
struct OkResult {
    bool ok = false;
    enum Kind { LabelWitness, SmallMass, TracePoint, NotOk } kind = NotOk;
    Label witness;  // {0} for SmallMass; the found label otherwise
};
OkResult ok_test(const Box& Q, const Label& A, const AtomicMeasure& mu, int m,
                 double p, const OracleConfig& cfg);

}  // namespace sumext
