#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sumext/dyadic.hpp"
#include "sumext/linmap.hpp"
#include "sumext/measure.hpp"
#include "sumext/oracle.hpp"
#include "sumext/pou.hpp"
#include "sumext/types.hpp"

namespace sumext {

struct ExtConfig {
    int m = 1;
    double p = 2.0;
    OracleConfig oracle;
    CZConfig cz;
    int max_recursion = 2;  // depth at which local solves bottom out on the oracle
};

// Jet-valued linear map of theta = [f (N); p0 (D)]; coefficients about base.
struct LinJet {
    Mat th;   // D x (N+D)
    Vec base;
};

struct MTermSpec {
    enum Kind { Zeta, Psi } kind = Psi;
    int atom_gid = -1;
    double weight = 0.0;
    bool winf = false;
    RowVec form;  // over theta
    std::string tag;
};

struct FunctionalRec {
    int id = -1;
    std::string kind;  // local-solve | keystone-jet | point-eval | jet-diff | anchor | xi-select
    Box support;
    bool is_point = false;
    Vec point;
    RowVec form;  // over theta
};

// One node of the recursive construction; all linear maps are over the global
// theta vector so composition is free.
struct LocalOperator {
    enum Branch { Base, OracleDirect, Delegate, Decompose } branch = Base;
    int m = 1, n = 1;
    double p = 2.0;
    double delta = 1.0;
    Label A;
    Box root, dom;
    LinJet P;

    std::vector<MTermSpec> terms;        // this level's full M decomposition
    std::vector<FunctionalRec> omega;    // this level's ledger entries (not kids')

    // Delegate
    std::shared_ptr<LocalOperator> child;

    // OracleDirect
    TensorBasis basis;
    Mat W;  // spline coefficients = W theta

    // Decompose
    CZTree tree;
    BumpSystem bumps;
    std::vector<LinJet> Rcube;  // per cube, the Whitney field R_i = R'_{kappa(i)}
    std::vector<std::shared_ptr<LocalOperator>> kids;
    int big_cube = 0;

    FieldPtr apply(const Vec& theta) const;
    void gather_terms(std::vector<MTermSpec>& out) const;
    void gather_omega(std::vector<FunctionalRec>& out) const;
    void gather_hints(std::vector<double>& out) const;  // n = 1 breakpoints
    // Jet at y recomputed strictly through ledger functional values; counts
    // the functionals used.
    Jet reconstruct_jet(const Vec& theta, const Vec& y, int& count) const;
};

std::shared_ptr<LocalOperator> extend_local(const AtomicMeasure& mu, int Nf,
                                            const Label& A, double delta,
                                            const Box& root, const Box& dom,
                                            const LinJet& P, int depth,
                                            const ExtConfig& cfg);

struct MTermEval {
    MTermSpec spec;
    double value = 0.0;
};

struct ExtensionResult {
    AtomicMeasure mu;   // normalized measure the operator was built for
    Vec f;
    int m = 1;
    double p = 2.0;
    std::shared_ptr<LocalOperator> op;
    Mat Xi;             // p0 = Xi f
    Jet P0;             // selected jet (about bp)
    Vec bp;
    FieldPtr Tf;        // outer-glued extension
    double Mf = 0.0;
    bool m_finite = true;
    std::vector<MTermEval> terms;
    std::vector<FunctionalRec> omega;  // theta-forms; compose with Xi for pure f

    // diagnostics
    double oracle_norm = 0.0;   // ||f||_{J(mu)} from the oracle
    double tf_norm = 0.0;       // ||Tf||_{J(f,mu)} by quadrature
    double distortion = 0.0;    // tf_norm / oracle_norm
    double m_ratio = 0.0;       // Mf / tf_norm
    double trace_residual = 0.0;
    ExtConfig cfg;

    Vec theta() const;
    // omega value for functional r at the stored f
    double omega_value(const FunctionalRec& r) const;
};

ExtensionResult top_extend(const AtomicMeasure& mu, const Vec& f, const ExtConfig& cfg);

// Evaluates the stored term list at (possibly new) f; infinite-weight zeta
// terms must vanish for a finite value.
double m_functional(const ExtensionResult& res, const Vec& f, bool* finite = nullptr,
                    std::vector<MTermEval>* terms = nullptr);

struct ConstructReport {
    bool pass = true;
    int max_upsilon = 0;        // max functionals per jet reconstruction
    double max_jet_error = 0.0;
    int overlap = 0;            // support multiplicity of the ledger
    double max_linearity_err = 0.0;
    std::vector<std::string> violations;
};

ConstructReport constructibility_report(const ExtensionResult& res, int npoints,
                                        unsigned seed);

// ||F||_{L^{m,p}(box)}^p by composite Gauss quadrature between hint points.
double lmp_seminorm_pow(const Field& F, const Box& box, int m, double p,
                        std::vector<double> hints, int per_cell = 16,
                        int refine = 2);

// ||Tf||_{J(f,mu)} for an explicit field.
double j_functional_of_field(const Field& F, const AtomicMeasure& mu, const Vec& f,
                             const Box& box, int m, double p,
                             const std::vector<double>& hints);

}  // namespace sumext
