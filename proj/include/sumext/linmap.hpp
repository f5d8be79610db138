#pragma once

#include "sumext/types.hpp"

namespace sumext {

// Finite block problem for the linear near-minimizer selectors: residual
// terms r_l(v, w) = (Bv v + Bw w)_l with weights nu_l; objective
// M(v, w) = sum_l nu_l |r_l|^p; optional linear constraint
// Psiv v + Psiw w = 0 with w |-> Psiw w surjective.
struct BlockProblem {
    Mat Bv, Bw;
    Vec nu;
    double p = 2.0;
    Mat Psiv, Psiw;

    int k() const { return static_cast<int>(Bw.cols()); }
};

// Linear map Xi with M(v, Xi v) <= (1+2^p)^k inf_w M(v, w). For p = 2 the
// joint least-squares solution is returned (the true minimum, still linear);
// otherwise the coordinatewise one-dimensional formula is applied in natural
// index order.
Mat select(const BlockProblem& prob);

// Same with the constraint eliminated by pivoted Gaussian elimination first;
// throws if Psiw is not surjective.
Mat select_constrained(const BlockProblem& prob);

}  // namespace sumext
