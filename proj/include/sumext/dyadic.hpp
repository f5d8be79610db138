#pragma once

#include <array>
#include <string>
#include <vector>

#include "sumext/measure.hpp"
#include "sumext/multiindex.hpp"
#include "sumext/oracle.hpp"
#include "sumext/types.hpp"

namespace sumext {

// Dyadic subcube of a root box: level k <= 0, index j in [0, 2^-k)^n.
struct CZCube {
    int level = 0;
    std::array<int, kMaxDim> index{{0, 0}};
    Box box;
    OkResult witness;
};

struct CZConfig {
    int max_depth = 40;
    double chain_c = 0.9;  // a-priori decay base for the chain certificate
};

struct CZTree {
    Box root;
    int n = 1, m = 1;
    double p = 2.0;
    Label A;  // the label the decomposition was built for
    std::vector<CZCube> cubes;
    std::vector<std::vector<int>> neighbors;  // closed-closure adjacency, self excluded
    std::vector<int> keystones;               // indices into cubes
    std::vector<std::vector<int>> chains;     // per cube, ends at a keystone
    std::vector<int> kappa;                   // per cube, index of terminal keystone cube
    double chain_C = 1.0, chain_c = 0.9;      // fitted certificate

    int size() const { return static_cast<int>(cubes.size()); }
    double side(int i) const { return cubes[static_cast<size_t>(i)].box.sides()[0]; }
    Vec center(int i) const { return cubes[static_cast<size_t>(i)].box.center(); }
    int find_cube(const Vec& x) const;  // -1 when x lies in no cube
    bool is_keystone(int i) const;
};

// Maximal OK dyadic subcubes of `root` for the label A. The caller normally
// ensures the root itself is not OK; if it is, the tree is the single root
// cube.
CZTree cz_decompose(const AtomicMeasure& mu, const Label& A, const Box& root, int m,
                    double p, const OracleConfig& ocfg, const CZConfig& cfg = {});

struct GeometryReport {
    bool pass = true;
    std::vector<std::string> violations;
    double max_neighbor_ratio = 1.0;
    int max_multiplicity_13 = 0;   // covering multiplicity of {1.3 Q_i}
    double min_boundary_side = 0.0;
    double chain_C = 1.0, chain_c = 0.9;
    bool partition_ok = true;      // every sample of root lies in exactly one cube
    bool parent_not_ok_checked = false;
    bool parent_not_ok_pass = true;
};

GeometryReport geometry_audit(const CZTree& tree, const AtomicMeasure* mu = nullptr,
                              const OracleConfig* ocfg = nullptr,
                              bool verify_parents = false);

// Keystone cubes: minimal sidelength within their 100-fold neighborhoods.
std::vector<int> keystone_cubes(const CZTree& tree);

// Junior-partner chain from cube i to a keystone cube.
std::vector<int> chain(const CZTree& tree, int i);

}  // namespace sumext
