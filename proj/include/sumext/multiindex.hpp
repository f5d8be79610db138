#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sumext {

constexpr int kMaxDim = 2;   // n <= 2 at desk scale
constexpr int kMaxOrder = 4; // m <= 4

// Multi-index alpha in Z_{>=0}^n with |alpha| <= m-1.
struct MultiIndex {
    int n = 1;
    std::array<int, kMaxDim> a{{0, 0}};

    MultiIndex() = default;
    MultiIndex(int n_, std::initializer_list<int> init) : n(n_) {
        int i = 0;
        for (int v : init) a[static_cast<size_t>(i++)] = v;
    }
    static MultiIndex zero(int n_) { MultiIndex mi; mi.n = n_; return mi; }

    int order() const {
        int s = 0;
        for (int i = 0; i < n; ++i) s += a[static_cast<size_t>(i)];
        return s;
    }
    int operator[](int i) const { return a[static_cast<size_t>(i)]; }
    int& operator[](int i) { return a[static_cast<size_t>(i)]; }

    bool operator==(const MultiIndex& o) const {
        if (n != o.n) return false;
        for (int i = 0; i < n; ++i) if (a[static_cast<size_t>(i)] != o.a[static_cast<size_t>(i)]) return false;
        return true;
    }
    bool operator!=(const MultiIndex& o) const { return !(*this == o); }

    // alpha <= beta componentwise
    bool dominated_by(const MultiIndex& o) const {
        for (int i = 0; i < n; ++i) if (a[static_cast<size_t>(i)] > o.a[static_cast<size_t>(i)]) return false;
        return true;
    }

    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex r = *this;
        for (int i = 0; i < n; ++i) r[i] += o[i];
        return r;
    }
    MultiIndex operator-(const MultiIndex& o) const {
        MultiIndex r = *this;
        for (int i = 0; i < n; ++i) r[i] -= o[i];
        return r;
    }
};

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// alpha! = prod alpha_i!
inline double mi_factorial(const MultiIndex& mi) {
    double r = 1.0;
    for (int i = 0; i < mi.n; ++i) r *= factorial(mi[i]);
    return r;
}

// x^alpha
inline double mi_pow(const MultiIndex& mi, const double* x) {
    double r = 1.0;
    for (int i = 0; i < mi.n; ++i)
        for (int k = 0; k < mi[i]; ++k) r *= x[i];
    return r;
}

// Order on multi-indices: let k in {0,..,n} be maximal with differing prefix
// sums; alpha < beta iff the alpha prefix sum at k is smaller. Total and
// strict on distinct indices; equal indices compare false.
inline bool multiindex_less(const MultiIndex& alpha, const MultiIndex& beta) {
    if (alpha.n != beta.n)
        throw std::invalid_argument("multiindex_less: dimension mismatch");
    int sa = 0, sb = 0, kmax = -1;
    int pa = 0, pb = 0;
    for (int k = 1; k <= alpha.n; ++k) {
        pa += alpha[k - 1];
        pb += beta[k - 1];
        if (pa != pb) { kmax = k; sa = pa; sb = pb; }
    }
    if (kmax < 0) return false;  // alpha == beta
    return sa < sb;
}

// All multi-indices of order <= m-1 in n variables, sorted ascending by
// multiindex_less. This ordering is the canonical coefficient layout.
inline std::vector<MultiIndex> index_set(int m, int n) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("index_set: n must be 1 or 2");
    if (m < 1 || m > kMaxOrder) throw std::invalid_argument("index_set: m must be in 1..4");
    std::vector<MultiIndex> out;
    if (n == 1) {
        for (int k = 0; k <= m - 1; ++k) out.push_back(MultiIndex(1, {k}));
    } else {
        for (int k = 0; k <= m - 1; ++k)
            for (int i = 0; i <= k; ++i) out.push_back(MultiIndex(2, {i, k - i}));
    }
    std::sort(out.begin(), out.end(), multiindex_less);
    return out;
}

inline int index_of(const std::vector<MultiIndex>& set, const MultiIndex& mi) {
    for (size_t i = 0; i < set.size(); ++i)
        if (set[i] == mi) return static_cast<int>(i);
    return -1;
}

// A label: a set of multi-indices, kept sorted ascending.
struct Label {
    std::vector<MultiIndex> elems;

    Label() = default;
    explicit Label(std::vector<MultiIndex> e) : elems(std::move(e)) {
        std::sort(elems.begin(), elems.end(), multiindex_less);
    }

    bool empty() const { return elems.empty(); }
    size_t size() const { return elems.size(); }
    bool contains(const MultiIndex& mi) const { return index_of(elems, mi) >= 0; }

    bool operator==(const Label& o) const { return elems == o.elems; }
    bool operator!=(const Label& o) const { return !(*this == o); }
};

inline Label full_label(int m, int n) { return Label(index_set(m, n)); }

// Order on labels: A < B iff the minimal element of the symmetric difference
// lies in A. The empty set is maximal; the full set M is minimal.
inline bool label_less(const Label& A, const Label& B) {
    // merge walk over the two sorted lists; first non-common element decides
    size_t i = 0, j = 0;
    while (i < A.elems.size() && j < B.elems.size()) {
        if (A.elems[i] == B.elems[j]) { ++i; ++j; continue; }
        return multiindex_less(A.elems[i], B.elems[j]);
    }
    if (i < A.elems.size()) return true;   // leftover minimal element is in A
    return false;                          // leftover in B, or A == B
}

// A is monotonic if alpha in A and |gamma| <= m-1-|alpha| imply alpha+gamma in A.
// Equivalent to closure under adding unit vectors while the order budget allows.
inline bool is_monotonic(const Label& A, int m, int n) {
    for (const MultiIndex& alpha : A.elems) {
        if (alpha.order() >= m - 1) continue;
        for (int i = 0; i < n; ++i) {
            MultiIndex up = alpha;
            up[i] += 1;
            if (!A.contains(up)) return false;
        }
    }
    return true;
}

// All monotonic labels (including the empty set and M), sorted ascending in
// the label order, i.e. from M (minimal) towards the empty set (maximal).
inline std::vector<Label> monotonic_labels(int m, int n) {
    std::vector<MultiIndex> M = index_set(m, n);
    int D = static_cast<int>(M.size());
    if (D > 20) throw std::invalid_argument("monotonic_labels: index set too large");
    std::vector<Label> out;
    for (std::uint32_t mask = 0; mask < (1u << D); ++mask) {
        std::vector<MultiIndex> elems;
        for (int i = 0; i < D; ++i)
            if (mask & (1u << i)) elems.push_back(M[static_cast<size_t>(i)]);
        Label L(std::move(elems));
        if (is_monotonic(L, m, n)) out.push_back(std::move(L));
    }
    std::sort(out.begin(), out.end(), label_less);
    return out;
}

}  // namespace sumext
