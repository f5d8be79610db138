#include "sumext/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sumext {

namespace {

Box subcube_box(const Box& root, int level, const std::array<int, kMaxDim>& idx, int n) {
    double side = root.sides()[0] * std::pow(2.0, level);
    Vec lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        lo[d] = root.lo[d] + idx[static_cast<size_t>(d)] * side;
        hi[d] = lo[d] + side;
    }
    return Box(lo, hi);
}

struct Builder {
    const AtomicMeasure& mu;
    const Label& A;
    const Box& root;
    int m, n;
    double p;
    const OracleConfig& ocfg;
    const CZConfig& cfg;
    std::vector<CZCube> out;

    void visit(int level, std::array<int, kMaxDim> idx) {
        Box b = subcube_box(root, level, idx, n);
        OkResult ok = ok_test(b, A, mu, m, p, ocfg);
        if (ok.ok) {
            CZCube c;
            c.level = level;
            c.index = idx;
            c.box = b;
            c.witness = ok;
            out.push_back(std::move(c));
            return;
        }
        if (-level >= cfg.max_depth)
            throw std::runtime_error(
                "cz_decompose: decomposition did not terminate at level " +
                std::to_string(level) + " index (" + std::to_string(idx[0]) + "," +
                std::to_string(idx[1]) + ")");
        for (int child = 0; child < (1 << n); ++child) {
            std::array<int, kMaxDim> ci = idx;
            for (int d = 0; d < n; ++d) ci[static_cast<size_t>(d)] = 2 * idx[static_cast<size_t>(d)] + ((child >> d) & 1);
            visit(level - 1, ci);
        }
    }
};

bool cube_index_less(const CZCube& a, const CZCube& b) {
    if (a.level != b.level) return a.level > b.level;  // larger cubes first
    if (a.index[0] != b.index[0]) return a.index[0] < b.index[0];
    return a.index[1] < b.index[1];
}

}  // namespace

int CZTree::find_cube(const Vec& x) const {
    for (int i = 0; i < size(); ++i)
        if (cubes[static_cast<size_t>(i)].box.contains(x)) return i;
    return -1;
}

bool CZTree::is_keystone(int i) const {
    return std::find(keystones.begin(), keystones.end(), i) != keystones.end();
}

std::vector<int> keystone_cubes(const CZTree& tree) {
    std::vector<int> keys;
    for (int i = 0; i < tree.size(); ++i) {
        Box big = tree.cubes[static_cast<size_t>(i)].box.dilate(100.0);
        bool minimal = true;
        for (int j = 0; j < tree.size() && minimal; ++j) {
            if (tree.cubes[static_cast<size_t>(j)].box.touches(big) &&
                tree.side(j) < tree.side(i))
                minimal = false;
        }
        if (minimal) keys.push_back(i);
    }
    return keys;
}

std::vector<int> chain(const CZTree& tree, int start) {
    std::vector<int> seq{start};
    int cur = start;
    int guard = 0;
    while (!tree.is_keystone(cur)) {
        if (++guard > 4 * tree.size() + 16)
            throw std::runtime_error("chain: walk failed to reach a keystone cube");
        // junior partner: nearest strictly smaller cube meeting 100Q
        Box big = tree.cubes[static_cast<size_t>(cur)].box.dilate(100.0);
        int junior = -1;
        double best = 0.0;
        for (int j = 0; j < tree.size(); ++j) {
            if (tree.side(j) > 0.5 * tree.side(cur) + 1e-15) continue;
            if (!tree.cubes[static_cast<size_t>(j)].box.touches(big)) continue;
            double d = box_dist(tree.cubes[static_cast<size_t>(cur)].box,
                                tree.cubes[static_cast<size_t>(j)].box);
            if (junior < 0 || d < best - 1e-15 ||
                (d < best + 1e-15 && cube_index_less(tree.cubes[static_cast<size_t>(j)],
                                                     tree.cubes[static_cast<size_t>(junior)])))
            {
                junior = j;
                best = d;
            }
        }
        if (junior < 0)
            throw std::runtime_error("chain: no junior partner for a non-keystone cube");

        // closest points of the two closed boxes, then walk the segment
        const Box& bc = tree.cubes[static_cast<size_t>(cur)].box;
        const Box& bj = tree.cubes[static_cast<size_t>(junior)].box;
        Vec s0(tree.n), s1(tree.n);
        for (int d = 0; d < tree.n; ++d) {
            // nearest pair coordinatewise
            if (bc.hi[d] < bj.lo[d]) { s0[d] = bc.hi[d]; s1[d] = bj.lo[d]; }
            else if (bj.hi[d] < bc.lo[d]) { s0[d] = bc.lo[d]; s1[d] = bj.hi[d]; }
            else {
                double v = 0.5 * (std::max(bc.lo[d], bj.lo[d]) + std::min(bc.hi[d], bj.hi[d]));
                s0[d] = v; s1[d] = v;
            }
        }
        // clip the segment against every cube; order of entry gives the walk
        struct Hit2 { double tin, tout; int id; };
        std::vector<Hit2> hits;
        Vec dvec = s1 - s0;
        for (int j = 0; j < tree.size(); ++j) {
            const Box& b = tree.cubes[static_cast<size_t>(j)].box;
            double t0 = 0.0, t1 = 1.0;
            bool okc = true;
            for (int d = 0; d < tree.n && okc; ++d) {
                if (std::abs(dvec[d]) < 1e-300) {
                    if (s0[d] < b.lo[d] - 1e-15 || s0[d] > b.hi[d] + 1e-15) okc = false;
                } else {
                    double ta = (b.lo[d] - s0[d]) / dvec[d];
                    double tb = (b.hi[d] - s0[d]) / dvec[d];
                    if (ta > tb) std::swap(ta, tb);
                    t0 = std::max(t0, ta);
                    t1 = std::min(t1, tb);
                    if (t0 > t1 + 1e-14) okc = false;
                }
            }
            if (okc && t1 >= t0 - 1e-14) hits.push_back({t0, t1, j});
        }
        std::sort(hits.begin(), hits.end(), [](const Hit2& a, const Hit2& b) {
            if (a.tin != b.tin) return a.tin < b.tin;
            return a.tout < b.tout;
        });
        for (const Hit2& h : hits) {
            if (h.id == cur) continue;
            if (seq.back() != h.id) seq.push_back(h.id);
            if (h.id == junior) break;
        }
        if (seq.back() != junior) seq.push_back(junior);
        cur = junior;
    }
    // drop duplicates while preserving order (a cube may be grazed twice)
    std::vector<int> dedup;
    for (int id : seq)
        if (std::find(dedup.begin(), dedup.end(), id) == dedup.end()) dedup.push_back(id);
    return dedup;
}

CZTree cz_decompose(const AtomicMeasure& mu, const Label& A, const Box& root, int m,
                    double p, const OracleConfig& ocfg, const CZConfig& cfg) {
    CZTree tree;
    tree.root = root;
    tree.n = mu.n;
    tree.m = m;
    tree.p = p;
    tree.A = A;
    tree.chain_c = cfg.chain_c;

    Builder b{mu, A, root, m, mu.n, p, ocfg, cfg, {}};
    OkResult rk = ok_test(root, A, mu, m, p, ocfg);
    if (rk.ok) {
        CZCube c;
        c.level = 0;
        c.box = root;
        c.witness = rk;
        tree.cubes.push_back(std::move(c));
    } else {
        b.visit(0, {0, 0});
        std::sort(b.out.begin(), b.out.end(), cube_index_less);
        tree.cubes = std::move(b.out);
    }

    const int N = tree.size();
    tree.neighbors.assign(static_cast<size_t>(N), {});
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (i != j && tree.cubes[static_cast<size_t>(i)].box.touches(tree.cubes[static_cast<size_t>(j)].box))
                tree.neighbors[static_cast<size_t>(i)].push_back(j);

    tree.keystones = keystone_cubes(tree);
    tree.chains.resize(static_cast<size_t>(N));
    tree.kappa.assign(static_cast<size_t>(N), -1);
    double Cfit = 1.0;
    for (int i = 0; i < N; ++i) {
        tree.chains[static_cast<size_t>(i)] = chain(tree, i);
        tree.kappa[static_cast<size_t>(i)] = tree.chains[static_cast<size_t>(i)].back();
        const std::vector<int>& ch = tree.chains[static_cast<size_t>(i)];
        for (size_t l = 0; l < ch.size(); ++l)
            for (size_t k = l; k < ch.size(); ++k) {
                double need = tree.side(ch[k]) /
                              (tree.side(ch[l]) * std::pow(cfg.chain_c, static_cast<double>(k - l)));
                Cfit = std::max(Cfit, need);
            }
    }
    tree.chain_C = Cfit;
    return tree;
}

GeometryReport geometry_audit(const CZTree& tree, const AtomicMeasure* mu,
                              const OracleConfig* ocfg, bool verify_parents) {
    GeometryReport rep;
    const int N = tree.size();
    const double root_side = tree.root.sides()[0];

    // neighbor sidelength ratios
    for (int i = 0; i < N; ++i)
        for (int j : tree.neighbors[static_cast<size_t>(i)]) {
            double r = tree.side(i) / tree.side(j);
            rep.max_neighbor_ratio = std::max(rep.max_neighbor_ratio, r);
            if (r > 2.0 + 1e-12) {
                rep.pass = false;
                rep.violations.push_back("neighbor ratio " + std::to_string(r) +
                                          " between cubes " + std::to_string(i) + " and " +
                                          std::to_string(j));
            }
        }

    // covering multiplicity of {1.3 Q_i} on the arrangement grid
    {
        std::vector<std::vector<double>> coords(static_cast<size_t>(tree.n));
        std::vector<Box> dil;
        for (int i = 0; i < N; ++i) {
            Box d = tree.cubes[static_cast<size_t>(i)].box.dilate(1.3);
            for (int a = 0; a < tree.n; ++a) {
                coords[static_cast<size_t>(a)].push_back(d.lo[a]);
                coords[static_cast<size_t>(a)].push_back(d.hi[a]);
            }
            dil.push_back(std::move(d));
        }
        for (auto& c : coords) std::sort(c.begin(), c.end());
        auto mids = [](const std::vector<double>& c) {
            std::vector<double> m;
            for (size_t i = 0; i + 1 < c.size(); ++i)
                if (c[i + 1] > c[i]) m.push_back(0.5 * (c[i] + c[i + 1]));
            return m;
        };
        std::vector<double> mx = mids(coords[0]);
        std::vector<double> my = tree.n == 2 ? mids(coords[1]) : std::vector<double>{0.0};
        for (double x : mx)
            for (double y : my) {
                Vec pt(tree.n);
                pt[0] = x;
                if (tree.n == 2) pt[1] = y;
                int cnt = 0;
                for (const Box& d : dil)
                    if (d.lo[0] < pt[0] && pt[0] < d.hi[0] &&
                        (tree.n == 1 || (d.lo[1] < pt[1] && pt[1] < d.hi[1])))
                        ++cnt;
                rep.max_multiplicity_13 = std::max(rep.max_multiplicity_13, cnt);
            }
        int cap = tree.n == 1 ? 16 : 64;  // generous C(n)
        if (rep.max_multiplicity_13 > cap) {
            rep.pass = false;
            rep.violations.push_back("1.3Q multiplicity " +
                                      std::to_string(rep.max_multiplicity_13));
        }
    }

    // boundary cubes not too small
    rep.min_boundary_side = root_side;
    for (int i = 0; i < N; ++i) {
        const Box& b = tree.cubes[static_cast<size_t>(i)].box;
        bool on_boundary = false;
        for (int d = 0; d < tree.n; ++d)
            if (b.lo[d] <= tree.root.lo[d] + 1e-14 || b.hi[d] >= tree.root.hi[d] - 1e-14)
                on_boundary = true;
        if (!on_boundary) continue;
        rep.min_boundary_side = std::min(rep.min_boundary_side, tree.side(i));
        if (tree.side(i) < root_side / 20.0 - 1e-14) {
            rep.pass = false;
            rep.violations.push_back("boundary cube " + std::to_string(i) + " has side " +
                                      std::to_string(tree.side(i)));
        }
    }

    // partition check on a sample grid (also certifies K_p emptiness)
    {
        int G = 64;
        bool ok = true;
        for (int gx = 0; gx < G && ok; ++gx)
            for (int gy = 0; gy < (tree.n == 2 ? G : 1) && ok; ++gy) {
                Vec pt(tree.n);
                pt[0] = tree.root.lo[0] + root_side * (gx + 0.5) / G;
                if (tree.n == 2) pt[1] = tree.root.lo[1] + tree.root.sides()[1] * (gy + 0.5) / G;
                int cnt = 0;
                for (int i = 0; i < N; ++i)
                    if (tree.cubes[static_cast<size_t>(i)].box.contains(pt)) ++cnt;
                if (cnt != 1) ok = false;
            }
        rep.partition_ok = ok;
        if (!ok) {
            rep.pass = false;
            rep.violations.push_back("partition/K_p check failed");
        }
    }

    // chain decay with the recorded certificate
    rep.chain_C = tree.chain_C;
    rep.chain_c = tree.chain_c;
    for (size_t i = 0; i < tree.chains.size(); ++i) {
        const std::vector<int>& ch = tree.chains[i];
        for (size_t l = 0; l < ch.size(); ++l)
            for (size_t k = l; k < ch.size(); ++k) {
                double bound = tree.chain_C *
                               std::pow(tree.chain_c, static_cast<double>(k - l)) *
                               tree.side(ch[l]);
                if (tree.side(ch[k]) > bound * (1.0 + 1e-12)) {
                    rep.pass = false;
                    rep.violations.push_back("chain decay violated from cube " +
                                              std::to_string(ch[l]));
                }
            }
    }

    // optional oracle re-verification: each cube OK, its parent (inside root) not
    if (verify_parents && mu && ocfg) {
        rep.parent_not_ok_checked = true;
        for (int i = 0; i < N && rep.parent_not_ok_pass; ++i) {
            const CZCube& c = tree.cubes[static_cast<size_t>(i)];
            if (c.level == 0) continue;
            std::array<int, kMaxDim> pidx = c.index;
            for (int d = 0; d < tree.n; ++d) pidx[static_cast<size_t>(d)] /= 2;
            Box pbox = subcube_box(tree.root, c.level + 1, pidx, tree.n);
            OkResult pr = ok_test(pbox, tree.A, *mu, tree.m, tree.p, *ocfg);
            OkResult cr = ok_test(c.box, tree.A, *mu, tree.m, tree.p, *ocfg);
            if (pr.ok || !cr.ok) rep.parent_not_ok_pass = false;
        }
        if (!rep.parent_not_ok_pass) {
            rep.pass = false;
            rep.violations.push_back("parent-not-OK re-verification failed");
        }
    }

    return rep;
}

}  // namespace sumext
