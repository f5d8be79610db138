#include "sumext/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace sumext {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RowVec jet_eval_row(const LinJet& J, int m, int n, const MultiIndex& alpha, const Vec& at) {
    return jet_deriv_row(m, n, alpha, Vec(at - J.base)) * J.th;
}

// w = Wmap * theta minimizing sum nu |Aw w - Gv theta|^p s.t. Cw w = Dv theta.
Mat linear_min_system(const LinearSystem& sys, double p) {
    BlockProblem prob;
    prob.Bv = -sys.Gv;
    prob.Bw = sys.Aw;
    prob.nu = sys.nu;
    prob.p = p;
    prob.Psiv = -sys.Dv;
    prob.Psiw = sys.Cw;
    return select_constrained(prob);
}

void terms_from_system(const LinearSystem& sys, const Mat& W, const std::string& tag,
                       std::vector<MTermSpec>& out) {
    Mat R = sys.Aw * W - sys.Gv;
    const double p = sys.p;
    for (int l = 0; l < R.rows(); ++l) {
        const RowKind& k = sys.kinds[static_cast<size_t>(l)];
        MTermSpec t;
        t.form = R.row(l);
        t.tag = tag;
        if (k.kind == RowKind::Zeta) {
            t.kind = MTermSpec::Zeta;
            t.atom_gid = k.atom_gid;
            t.weight = k.atom_w;
        } else {
            t.kind = MTermSpec::Psi;
            t.form *= std::pow(sys.nu[l], 1.0 / p);
        }
        out.push_back(std::move(t));
    }
    if (sys.Cw.rows() > 0) {
        Mat Rc = sys.Cw * W - sys.Dv;
        for (int l = 0; l < Rc.rows(); ++l) {
            const RowKind& k = sys.con_kinds[static_cast<size_t>(l)];
            if (k.kind != RowKind::Zeta) continue;  // jet constraints are exact
            MTermSpec t;
            t.kind = MTermSpec::Zeta;
            t.atom_gid = k.atom_gid;
            t.winf = true;
            t.form = Rc.row(l);
            t.tag = tag;
            out.push_back(std::move(t));
        }
    }
}

int rec_id_counter = 0;  // ids are per-process; reports renumber on output

void oracle_direct(LocalOperator& op, const AtomicMeasure& mu, const ExtConfig& cfg,
                   int ntheta) {
    AssemblySpec spec;
    spec.mu = &mu;
    spec.m = op.m;
    spec.n = op.n;
    spec.p = op.p;
    spec.dom = op.dom;
    spec.anchor = true;
    spec.anchor_delta = op.delta;
    spec.ntheta = ntheta;
    spec.fcol.reserve(static_cast<size_t>(mu.size()));
    for (const Atom& a : mu.atoms) spec.fcol.push_back(a.id);
    spec.pmap = op.P.th;
    spec.pbase = op.P.base;
    spec.enrich = cfg.oracle.exact_enrich;
    spec.uniform_grid = !cfg.oracle.use_exact(op.n, op.p);
    spec.grid_cells = op.n == 1 ? 64 : cfg.oracle.grid2;
    LinearSystem sys = assemble(spec);
    op.W = linear_min_system(sys, op.p);
    op.basis = sys.basis;
    terms_from_system(sys, op.W, "local", op.terms);
    for (int s = 0; s < op.W.rows(); ++s) {
        FunctionalRec r;
        r.id = rec_id_counter++;
        r.kind = "local-solve";
        r.support = op.dom;
        r.form = op.W.row(s);
        op.omega.push_back(std::move(r));
    }
    op.branch = LocalOperator::OracleDirect;
}

void base_case(LocalOperator& op, const AtomicMeasure& mu, int ntheta) {
    op.branch = LocalOperator::Base;
    const std::vector<MultiIndex> M0 = index_set(op.m, op.n);
    for (const Atom& a : mu.atoms) {
        MTermSpec t;
        t.kind = MTermSpec::Zeta;
        t.atom_gid = a.id;
        t.weight = a.w;
        t.winf = a.w_inf;
        t.form = jet_eval_row(op.P, op.m, op.n, MultiIndex::zero(op.n), a.x);
        t.form[a.id] -= 1.0;  // P(x_j) - f_j
        t.tag = "base";
        op.terms.push_back(std::move(t));

        FunctionalRec r;
        r.id = rec_id_counter++;
        r.kind = "point-eval";
        r.is_point = true;
        r.point = a.x;
        r.support = Box(a.x, a.x);
        r.form = RowVec::Zero(ntheta);
        r.form[a.id] = 1.0;
        op.omega.push_back(std::move(r));
    }
}

}  // namespace

std::shared_ptr<LocalOperator> extend_local(const AtomicMeasure& mu, int Nf,
                                            const Label& A, double delta,
                                            const Box& root, const Box& dom,
                                            const LinJet& P, int depth,
                                            const ExtConfig& cfg) {
    auto op = std::make_shared<LocalOperator>();
    op->m = cfg.m;
    op->n = mu.n;
    op->p = cfg.p;
    op->delta = delta;
    op->A = A;
    op->root = root;
    op->dom = dom;
    op->P = P;
    const int m = cfg.m, n = mu.n;
    const double p = cfg.p;
    const int ntheta = static_cast<int>(P.th.cols());
    const Label Mfull = full_label(m, n);

    if (mu.empty() || A == Mfull) {
        base_case(*op, mu, ntheta);
        return op;
    }

    // small total mass: the constant-extension argument applies; the oracle
    // solve is at least as good
    Box scope = root.dilate(3.0);
    double ms = mass(mu, scope);
    double thresh = cfg.oracle.eps_basis *
                    std::pow(10.0 * delta, static_cast<double>(n) / p - m);
    if (std::isfinite(ms) && std::pow(ms, 1.0 / p) <= thresh) {
        oracle_direct(*op, mu, cfg, ntheta);
        return op;
    }

    // label delegation: easiest monotone label with bases everywhere
    for (const Label& Ab : monotonic_labels(m, n)) {
        if (!label_less(Ab, A)) continue;
        bool all = true;
        for (const Atom& a : mu.atoms) {
            BasisResult b = has_basis(Ab, a.x, cfg.oracle.eps_basis, 10.0 * delta, mu,
                                      scope, m, p, cfg.oracle);
            if (!b.ok) { all = false; break; }
        }
        if (all) {
            op->branch = LocalOperator::Delegate;
            op->child = extend_local(mu, Nf, Ab, delta, root, dom, P, depth, cfg);
            return op;
        }
    }

    if (mu.size() == 1 && mu.atoms[0].w_inf) {
        oracle_direct(*op, mu, cfg, ntheta);
        return op;
    }

    if (depth >= cfg.max_recursion) {
        oracle_direct(*op, mu, cfg, ntheta);
        return op;
    }

    // Calderon-Zygmund branch
    op->branch = LocalOperator::Decompose;
    op->tree = cz_decompose(mu, A, root, m, p, cfg.oracle, cfg.cz);
    CZTree& tree = op->tree;
    if (tree.size() == 1) {  // cannot happen when the label search above failed
        op->terms.clear();
        oracle_direct(*op, mu, cfg, ntheta);
        return op;
    }

    const std::vector<MultiIndex> M0 = index_set(m, n);
    const int D = static_cast<int>(M0.size());

    // keystone jets, coherent with P on A
    std::vector<LinJet> Rprime(tree.keystones.size());
    for (size_t si = 0; si < tree.keystones.size(); ++si) {
        int ks = tree.keystones[si];
        Box b9 = tree.cubes[static_cast<size_t>(ks)].box.dilate(9.0).intersect(root);
        Vec xs = tree.center(ks);
        AtomicMeasure mus = restrict(mu, b9);

        AssemblySpec spec;
        spec.mu = &mus;
        spec.m = m;
        spec.n = n;
        spec.p = p;
        spec.dom = b9;
        spec.anchor = true;
        spec.anchor_delta = tree.side(ks);
        spec.ntheta = ntheta;
        for (const Atom& a : mus.atoms) spec.fcol.push_back(a.id);
        spec.p_in_w = true;
        spec.pbase = xs;
        spec.enrich = cfg.oracle.exact_enrich;
        spec.uniform_grid = !cfg.oracle.use_exact(n, p);
        spec.grid_cells = n == 1 ? 64 : cfg.oracle.grid2;
        LinearSystem sys = assemble(spec);

        const int nb = sys.nw() - D;
        const int extra = static_cast<int>(A.size());
        Mat Cw2 = Mat::Zero(sys.Cw.rows() + extra, sys.nw());
        Mat Dv2 = Mat::Zero(sys.Dv.rows() + extra, ntheta);
        Cw2.topRows(sys.Cw.rows()) = sys.Cw;
        Dv2.topRows(sys.Dv.rows()) = sys.Dv;
        int r = static_cast<int>(sys.Cw.rows());
        for (const MultiIndex& alpha : A.elems) {
            Cw2(r, nb + index_of(M0, alpha)) = mi_factorial(alpha);
            Dv2.row(r) = jet_eval_row(P, m, n, alpha, xs);
            ++r;
        }
        sys.Cw = std::move(Cw2);
        sys.Dv = std::move(Dv2);
        sys.con_kinds.resize(static_cast<size_t>(sys.Cw.rows()), {RowKind::Psi, -1, 0.0});

        Mat Wfull = linear_min_system(sys, p);
        Rprime[si].th = Wfull.bottomRows(D);
        Rprime[si].base = xs;

        for (int g = 0; g < D; ++g) {
            FunctionalRec rec;
            rec.id = rec_id_counter++;
            rec.kind = "keystone-jet";
            rec.support = tree.cubes[static_cast<size_t>(ks)].box.dilate(9.0);
            rec.form = Rprime[si].th.row(g);
            op->omega.push_back(std::move(rec));
        }
    }

    auto key_index = [&](int cube) {
        for (size_t si = 0; si < tree.keystones.size(); ++si)
            if (tree.keystones[si] == cube) return static_cast<int>(si);
        throw std::logic_error("kappa target is not a keystone cube");
    };

    op->Rcube.resize(static_cast<size_t>(tree.size()));
    for (int i = 0; i < tree.size(); ++i)
        op->Rcube[static_cast<size_t>(i)] =
            Rprime[static_cast<size_t>(key_index(tree.kappa[static_cast<size_t>(i)]))];

    // children
    op->kids.resize(static_cast<size_t>(tree.size()));
    std::vector<Box> cube_boxes;
    for (int i = 0; i < tree.size(); ++i) {
        const CZCube& c = tree.cubes[static_cast<size_t>(i)];
        cube_boxes.push_back(c.box);
        Box sup = c.box.dilate(1.1);
        Box dom_i = sup.intersect(root);
        AtomicMeasure mui = restrict(mu, dom_i);
        Label childA = c.witness.kind == OkResult::LabelWitness ? c.witness.witness : A;
        op->kids[static_cast<size_t>(i)] =
            extend_local(mui, Nf, childA, tree.side(i), c.box.dilate(11.0), dom_i,
                         op->Rcube[static_cast<size_t>(i)], depth + 1, cfg);
    }
    op->bumps = build_pou(cube_boxes, m);
    op->big_cube = 0;  // cubes are sorted large-to-small

    // neighbor jet-difference terms
    for (int i = 0; i < tree.size(); ++i) {
        Vec xi = tree.center(i);
        double di = tree.side(i);
        for (int j : tree.neighbors[static_cast<size_t>(i)]) {
            if (tree.kappa[static_cast<size_t>(i)] == tree.kappa[static_cast<size_t>(j)])
                continue;
            for (const MultiIndex& alpha : M0) {
                double c = std::pow(di, (n + (alpha.order() - m) * p) / p);
                MTermSpec t;
                t.kind = MTermSpec::Psi;
                t.tag = "jetdiff";
                t.form = c * (jet_eval_row(op->Rcube[static_cast<size_t>(i)], m, n, alpha, xi) -
                              jet_eval_row(op->Rcube[static_cast<size_t>(j)], m, n, alpha, xi));
                op->terms.push_back(std::move(t));
            }
        }
        if (i != op->big_cube) continue;
        // anchor terms |R_1 - P|_{x_1, delta_{Q_1}} tying the field to P
        for (const MultiIndex& alpha : M0) {
            double c = std::pow(di, (n + (alpha.order() - m) * p) / p);
            MTermSpec t;
            t.kind = MTermSpec::Psi;
            t.tag = "anchor";
            t.form = c * (jet_eval_row(op->Rcube[static_cast<size_t>(i)], m, n, alpha, xi) -
                          jet_eval_row(P, m, n, alpha, xi));
            op->terms.push_back(std::move(t));

            FunctionalRec rec;
            rec.id = rec_id_counter++;
            rec.kind = "anchor";
            rec.support = root;
            rec.form = t.form;
            op->omega.push_back(std::move(rec));
        }
    }
    // jet-difference ledger entries, one per involved pair
    for (int i = 0; i < tree.size(); ++i)
        for (int j : tree.neighbors[static_cast<size_t>(i)]) {
            if (j < i) continue;
            if (tree.kappa[static_cast<size_t>(i)] == tree.kappa[static_cast<size_t>(j)])
                continue;
            FunctionalRec rec;
            rec.id = rec_id_counter++;
            rec.kind = "jet-diff";
            int ki = tree.kappa[static_cast<size_t>(i)], kj = tree.kappa[static_cast<size_t>(j)];
            rec.support = tree.cubes[static_cast<size_t>(ki)].box.dilate(9.0).hull(
                tree.cubes[static_cast<size_t>(kj)].box.dilate(9.0));
            rec.form = jet_eval_row(op->Rcube[static_cast<size_t>(i)], m, n,
                                    MultiIndex::zero(n), tree.center(i)) -
                       jet_eval_row(op->Rcube[static_cast<size_t>(j)], m, n,
                                    MultiIndex::zero(n), tree.center(i));
            op->omega.push_back(std::move(rec));
        }

    return op;
}

FieldPtr LocalOperator::apply(const Vec& theta) const {
    switch (branch) {
        case Base: {
            Jet Pj(m, n, Vec(P.th * theta));
            return std::make_shared<PolyField>(Pj, P.base);
        }
        case OracleDirect:
            return std::make_shared<SplineField>(basis, Vec(W * theta), m);
        case Delegate:
            return child->apply(theta);
        case Decompose: {
            std::vector<FieldPtr> fields;
            fields.reserve(kids.size());
            for (const auto& k : kids) fields.push_back(k->apply(theta));
            return std::make_shared<PatchField>(bumps, std::move(fields));
        }
    }
    throw std::logic_error("LocalOperator::apply: bad branch");
}

void LocalOperator::gather_terms(std::vector<MTermSpec>& out) const {
    for (const MTermSpec& t : terms) out.push_back(t);
    if (branch == Delegate) child->gather_terms(out);
    if (branch == Decompose)
        for (const auto& k : kids) k->gather_terms(out);
}

void LocalOperator::gather_omega(std::vector<FunctionalRec>& out) const {
    for (const FunctionalRec& r : omega) out.push_back(r);
    if (branch == Delegate) child->gather_omega(out);
    if (branch == Decompose)
        for (const auto& k : kids) k->gather_omega(out);
}

void LocalOperator::gather_hints(std::vector<double>& out) const {
    if (branch == Delegate) { child->gather_hints(out); return; }
    if (branch == OracleDirect) {
        for (double b : basis.axis(0).breakpoints()) out.push_back(b);
        return;
    }
    if (branch == Decompose) {
        for (int i = 0; i < tree.size(); ++i) {
            const Box& b = tree.cubes[static_cast<size_t>(i)].box;
            double collar = 0.05 * tree.side(i);
            out.push_back(b.lo[0]);
            out.push_back(b.hi[0]);
            out.push_back(b.lo[0] - collar);
            out.push_back(b.hi[0] + collar);
        }
        for (const auto& k : kids) k->gather_hints(out);
    }
}

Jet LocalOperator::reconstruct_jet(const Vec& theta, const Vec& y, int& count) const {
    const std::vector<MultiIndex> M0 = index_set(m, n);
    const int D = static_cast<int>(M0.size());
    switch (branch) {
        case Base: {
            count += D;
            PolyField pf(Jet(m, n, Vec(P.th * theta)), P.base);
            return pf.jet(y, m);
        }
        case OracleDirect: {
            Vec u = W * theta;
            count += static_cast<int>(u.size());
            Jet out(m, n);
            for (size_t ai = 0; ai < M0.size(); ++ai) {
                double v = basis.row(y, M0[ai]).dot(u);
                out.c[static_cast<Eigen::Index>(ai)] = v / mi_factorial(M0[ai]);
            }
            return out;
        }
        case Delegate:
            return child->reconstruct_jet(theta, y, count);
        case Decompose: {
            Jet out(m, n);
            for (int i = 0; i < tree.size(); ++i) {
                if (!bumps.in_support(i, y)) continue;
                Jet cj = kids[static_cast<size_t>(i)]->reconstruct_jet(theta, y, count);
                Jet bj(m, n, bumps.theta_taylor(i, y, m - 1));
                out.c += jet_product(cj, bj, Vec::Zero(n)).c;
            }
            return out;
        }
    }
    throw std::logic_error("reconstruct_jet: bad branch");
}

// --------------------------------------------------------------------------

double lmp_seminorm_pow(const Field& F, const Box& box, int m, double p,
                        std::vector<double> hints, int per_cell, int refine) {
    const int n = box.dim();
    std::vector<MultiIndex> tops;
    for (const MultiIndex& a : index_set_deg(m, n))
        if (a.order() == m) tops.push_back(a);

    std::vector<double> gx, gw;
    gauss_legendre(per_cell, gx, gw);
    double total = 0.0;

    if (n == 1) {
        hints.push_back(box.lo[0]);
        hints.push_back(box.hi[0]);
        std::sort(hints.begin(), hints.end());
        std::vector<double> cuts;
        for (double h : hints) {
            if (h < box.lo[0] - 1e-14 || h > box.hi[0] + 1e-14) continue;
            if (cuts.empty() || h - cuts.back() > 1e-13) cuts.push_back(h);
        }
        Vec y(1);
        for (size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
            for (int rr = 0; rr < refine; ++rr) {
                double lo = cuts[ci] + (cuts[ci + 1] - cuts[ci]) * rr / refine;
                double hi = cuts[ci] + (cuts[ci + 1] - cuts[ci]) * (rr + 1) / refine;
                double hh = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
                for (int q = 0; q < per_cell; ++q) {
                    y[0] = mid + hh * gx[static_cast<size_t>(q)];
                    Vec t = F.taylor(y, m);
                    double d = t[t.size() - 1] * mi_factorial(tops[0]);  // d^m F
                    total += hh * gw[static_cast<size_t>(q)] * std::pow(std::abs(d), p);
                }
            }
        }
        return total;
    }

    // n = 2: uniform cells (spot-check accuracy)
    const int G = 24;
    const std::vector<MultiIndex> S = index_set_deg(m, n);
    Vec y(2);
    for (int cx = 0; cx < G; ++cx)
        for (int cy = 0; cy < G; ++cy) {
            double lx = box.lo[0] + box.sides()[0] * cx / G;
            double hx = box.lo[0] + box.sides()[0] * (cx + 1) / G;
            double ly = box.lo[1] + box.sides()[1] * cy / G;
            double hy = box.lo[1] + box.sides()[1] * (cy + 1) / G;
            for (int qx = 0; qx < 3; ++qx)
                for (int qy = 0; qy < 3; ++qy) {
                    std::vector<double> g3x, g3w;
                    gauss_legendre(3, g3x, g3w);
                    y[0] = 0.5 * (lx + hx) + 0.5 * (hx - lx) * g3x[static_cast<size_t>(qx)];
                    y[1] = 0.5 * (ly + hy) + 0.5 * (hy - ly) * g3x[static_cast<size_t>(qy)];
                    Vec t = F.taylor(y, m);
                    double acc = 0.0;
                    for (const MultiIndex& a : tops) {
                        double d = t[index_of(S, a)] * mi_factorial(a);
                        acc += std::pow(std::abs(d), p);
                    }
                    total += 0.25 * (hx - lx) * (hy - ly) * g3w[static_cast<size_t>(qx)] *
                             g3w[static_cast<size_t>(qy)] * acc;
                }
        }
    return total;
}

double j_functional_of_field(const Field& F, const AtomicMeasure& mu, const Vec& f,
                             const Box& box, int m, double p,
                             const std::vector<double>& hints) {
    double J = lmp_seminorm_pow(F, box, m, p, hints);
    for (int j = 0; j < mu.size(); ++j) {
        const Atom& a = mu.atoms[static_cast<size_t>(j)];
        double r = std::abs(F.value(a.x) - f[a.id]);
        if (a.w_inf) {
            if (r > 1e-6) return kInf;
            continue;  // 0 * inf convention
        }
        J += a.w * std::pow(r, p);
    }
    return J;
}

// --------------------------------------------------------------------------

Vec ExtensionResult::theta() const {
    Vec th(f.size() + P0.c.size());
    th.head(f.size()) = f;
    th.tail(P0.c.size()) = P0.c;
    return th;
}

double ExtensionResult::omega_value(const FunctionalRec& r) const {
    return r.form.dot(theta());
}

ExtensionResult top_extend(const AtomicMeasure& mu, const Vec& f, const ExtConfig& cfg) {
    ExtensionResult res;
    res.mu = mu;
    res.f = f;
    res.m = cfg.m;
    res.p = cfg.p;
    res.cfg = cfg;
    const int m = cfg.m, n = mu.n;
    const double p = cfg.p;
    const int N = mu.size();
    const std::vector<MultiIndex> M0 = index_set(m, n);
    const int D = static_cast<int>(M0.size());

    Box Qo = unit_box(n);
    res.bp = Qo.center();
    LinJet Ptop;
    Ptop.th = Mat::Zero(D, N + D);
    Ptop.th.rightCols(D) = Mat::Identity(D, D);
    Ptop.base = res.bp;

    res.op = extend_local(mu, N, Label(), 0.1, Qo, Qo, Ptop, 0, cfg);

    std::vector<MTermSpec> terms;
    res.op->gather_terms(terms);

    // P0 = xi(f): linear near-minimizer of M(f, .) over the jet block
    std::vector<int> live;
    for (size_t i = 0; i < terms.size(); ++i)
        if (!terms[i].winf) live.push_back(static_cast<int>(i));
    BlockProblem prob;
    prob.Bv = Mat::Zero(static_cast<Eigen::Index>(live.size()), N);
    prob.Bw = Mat::Zero(static_cast<Eigen::Index>(live.size()), D);
    prob.nu = Vec::Ones(static_cast<Eigen::Index>(live.size()));
    prob.p = p;
    for (size_t r = 0; r < live.size(); ++r) {
        const MTermSpec& t = terms[static_cast<size_t>(live[r])];
        prob.Bv.row(static_cast<Eigen::Index>(r)) = t.form.head(N);
        prob.Bw.row(static_cast<Eigen::Index>(r)) = t.form.tail(D);
        if (t.kind == MTermSpec::Zeta) prob.nu[static_cast<Eigen::Index>(r)] = t.weight;
    }
    res.Xi = select(prob);
    res.P0 = Jet(m, n, Vec(res.Xi * f));

    Vec theta = res.theta();
    FieldPtr inner = res.op->apply(theta);
    double eta = 1.0 / 0.99 - 1.0;
    res.Tf = std::make_shared<GlueField>(inner, res.P0, res.bp, Qo.dilate(0.99), eta, m);

    // M value and stored terms
    res.terms.clear();
    double Mp = 0.0;
    double fscale = std::max(1.0, f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
    for (const MTermSpec& t : terms) {
        MTermEval ev;
        ev.spec = t;
        ev.value = t.form.dot(theta);
        if (t.winf) {
            if (std::abs(ev.value) > 1e-9 * fscale) res.m_finite = false;
        } else if (t.kind == MTermSpec::Zeta) {
            Mp += t.weight * std::pow(std::abs(ev.value), p);
        } else {
            Mp += std::pow(std::abs(ev.value), p);
        }
        res.terms.push_back(std::move(ev));
    }
    res.Mf = res.m_finite ? std::pow(Mp, 1.0 / p) : kInf;

    res.op->gather_omega(res.omega);
    for (int g = 0; g < D; ++g) {
        FunctionalRec r;
        r.id = -1;
        r.kind = "xi-select";
        r.support = Qo;
        r.form = RowVec::Zero(N + D);
        r.form.head(N) = res.Xi.row(g);
        res.omega.push_back(std::move(r));
    }
    for (size_t i = 0; i < res.omega.size(); ++i) res.omega[i].id = static_cast<int>(i);

    // diagnostics
    res.oracle_norm = j_norm(mu, f, m, p, cfg.oracle).value;
    std::vector<double> hints;
    res.op->gather_hints(hints);
    if (n == 1) {
        hints.push_back(0.005);  // outer glue collar edges
        hints.push_back(0.995);
    }
    res.tf_norm = std::pow(
        j_functional_of_field(*res.Tf, mu, f, Qo, m, p, hints), 1.0 / p);
    res.distortion = (res.oracle_norm > 1e-12) ? res.tf_norm / res.oracle_norm
                     : (res.tf_norm <= 1e-9 ? 1.0 : kInf);
    res.m_ratio = (res.tf_norm > 1e-12) ? res.Mf / res.tf_norm
                  : (res.Mf <= 1e-9 ? 1.0 : kInf);

    res.trace_residual = 0.0;
    for (const Atom& a : mu.atoms)
        if (a.w_inf)
            res.trace_residual =
                std::max(res.trace_residual, std::abs(res.Tf->value(a.x) - f[a.id]));
    return res;
}

double m_functional(const ExtensionResult& res, const Vec& f, bool* finite,
                    std::vector<MTermEval>* terms) {
    Vec theta(f.size() + res.P0.c.size());
    theta.head(f.size()) = f;
    theta.tail(res.P0.c.size()) = res.Xi * f;
    double Mp = 0.0;
    bool fin = true;
    double fscale = std::max(1.0, f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
    std::vector<MTermSpec> specs;
    res.op->gather_terms(specs);
    for (const MTermSpec& t : specs) {
        double v = t.form.dot(theta);
        if (t.winf) {
            if (std::abs(v) > 1e-9 * fscale) fin = false;
        } else if (t.kind == MTermSpec::Zeta) {
            Mp += t.weight * std::pow(std::abs(v), res.p);
        } else {
            Mp += std::pow(std::abs(v), res.p);
        }
        if (terms) terms->push_back({t, v});
    }
    if (finite) *finite = fin;
    return fin ? std::pow(Mp, 1.0 / res.p) : kInf;
}

ConstructReport constructibility_report(const ExtensionResult& res, int npoints,
                                        unsigned seed) {
    ConstructReport rep;
    const int m = res.m, n = res.mu.n;
    const int D = static_cast<int>(index_set(m, n).size());
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0.02, 0.98);
    Vec theta = res.theta();

    TensorRamp outer(unit_box(n).dilate(0.99), 0.5 * (1.0 / 0.99 - 1.0) * 0.99, m);

    for (int it = 0; it < npoints; ++it) {
        Vec y(n);
        for (int d = 0; d < n; ++d) y[d] = uni(rng);
        int count = 0;
        Jet inner = res.op->reconstruct_jet(theta, y, count);
        // outer glue: theta_out * inner + (1 - theta_out) * P0 (with xi records)
        Jet rec(m, n);
        if (outer.is_one(y)) {
            rec = inner;
        } else {
            Jet th(m, n, outer.taylor(y, m - 1));
            Jet pj = PolyField(res.P0, res.bp).jet(y, m);
            Jet one = Jet::constant(m, n, 1.0);
            Jet omth = one - th;
            rec.c = jet_product(inner, th, Vec::Zero(n)).c +
                    jet_product(pj, omth, Vec::Zero(n)).c;
            count += D;
        }
        Jet direct = res.Tf->jet(y, m);
        double scale = std::max(1.0, direct.c.cwiseAbs().maxCoeff());
        double err = (rec.c - direct.c).cwiseAbs().maxCoeff() / scale;
        rep.max_jet_error = std::max(rep.max_jet_error, err);
        rep.max_upsilon = std::max(rep.max_upsilon, count);
        if (err > 1e-8) {
            rep.pass = false;
            rep.violations.push_back("jet reconstruction error " + std::to_string(err));
        }
    }

    // two-probe linearity of every ledger functional (through the xi map)
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int N = res.mu.size();
    Vec f1(N), f2(N);
    for (int i = 0; i < N; ++i) { f1[i] = gauss(rng); f2[i] = gauss(rng); }
    double lam = 0.7;
    auto theta_of = [&](const Vec& f) {
        Vec th(N + D);
        th.head(N) = f;
        th.tail(D) = res.Xi * f;
        return th;
    };
    Vec t1 = theta_of(f1), t2 = theta_of(f2), t3 = theta_of(f1 + lam * f2);
    for (const FunctionalRec& r : res.omega) {
        double a = r.form.dot(t1), b = r.form.dot(t2), c = r.form.dot(t3);
        double err = std::abs(c - a - lam * b) /
                     std::max(1.0, std::max(std::abs(a), std::abs(b)));
        rep.max_linearity_err = std::max(rep.max_linearity_err, err);
    }
    if (rep.max_linearity_err > 1e-10) {
        rep.pass = false;
        rep.violations.push_back("functional linearity failure");
    }
    return rep;
}

}  // namespace sumext
