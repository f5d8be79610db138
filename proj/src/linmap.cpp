#include "sumext/linmap.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace sumext {

namespace {

Mat select_unconstrained(const Mat& Bv, const Mat& Bw, const Vec& nu, double p) {
    const int k = static_cast<int>(Bw.cols());
    const int nv = static_cast<int>(Bv.cols());
    if (k == 0) return Mat::Zero(0, nv);

    if (p == 2.0) {
        Mat Q = Bw.transpose() * nu.asDiagonal() * Bw;
        Mat R = -Bw.transpose() * nu.asDiagonal() * Bv;
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(Q);
        return cod.solve(R);
    }

    // sequential one-dimensional formula; xi_j is a row over (v, w_{>j})
    Mat V = Bv, A = Bw;
    std::vector<RowVec> xi(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
        Vec a = A.col(j);
        double denom = 0.0;
        for (int l = 0; l < a.size(); ++l)
            denom += nu[l] * std::pow(std::abs(a[l]), p);
        RowVec row = RowVec::Zero(nv + k);
        if (denom > 0.0) {
            for (int l = 0; l < a.size(); ++l) {
                if (a[l] == 0.0) continue;
                double c = nu[l] * a[l] * std::pow(std::abs(a[l]), p - 2.0) / denom;
                // residual_l = ... + a_l w_j; the minimizing w_j gets -hatLambda/a
                row.head(nv) += -c * V.row(l);
                for (int l2 = j + 1; l2 < k; ++l2) row[nv + l2] += -c * A(l, l2);
            }
        }
        xi[static_cast<size_t>(j)] = row;
        // substitute w_j into the residuals
        V += a * row.head(nv);
        for (int l2 = j + 1; l2 < k; ++l2) A.col(l2) += a * row[nv + l2];
        A.col(j).setZero();
    }

    // back-substitution: w_j = xi_j (v, w_{j+1..k-1})
    Mat Xi = Mat::Zero(k, nv);
    for (int j = k - 1; j >= 0; --j) {
        RowVec r = xi[static_cast<size_t>(j)].head(nv);
        for (int l2 = j + 1; l2 < k; ++l2)
            r += xi[static_cast<size_t>(j)][nv + l2] * Xi.row(l2);
        Xi.row(j) = r;
    }
    return Xi;
}

}  // namespace

Mat select(const BlockProblem& prob) {
    return select_unconstrained(prob.Bv, prob.Bw, prob.nu, prob.p);
}

Mat select_constrained(const BlockProblem& prob) {
    const int k = prob.k();
    const int nv = static_cast<int>(prob.Bv.cols());
    const int M = static_cast<int>(prob.Psiw.rows());
    if (M == 0) return select(prob);

    Eigen::ColPivHouseholderQR<Mat> qr(prob.Psiw);
    qr.setThreshold(1e-10);
    if (qr.rank() < M)
        throw std::runtime_error("select_constrained: constraint map not surjective");

    // eliminated block = the first M pivot columns
    Eigen::VectorXi perm = qr.colsPermutation().indices();
    std::vector<int> elim(perm.data(), perm.data() + M);
    std::vector<int> free_cols(perm.data() + M, perm.data() + k);

    Mat PsiE(M, M), PsiF(M, k - M);
    for (int j = 0; j < M; ++j) PsiE.col(j) = prob.Psiw.col(elim[static_cast<size_t>(j)]);
    for (int j = 0; j < k - M; ++j) PsiF.col(j) = prob.Psiw.col(free_cols[static_cast<size_t>(j)]);
    Eigen::PartialPivLU<Mat> lu(PsiE);
    Mat Ev = -lu.solve(prob.Psiv);   // w_E = Ev v + Ef w_F
    Mat Ef = -lu.solve(PsiF);

    Mat BwE(prob.Bw.rows(), M), BwF(prob.Bw.rows(), k - M);
    for (int j = 0; j < M; ++j) BwE.col(j) = prob.Bw.col(elim[static_cast<size_t>(j)]);
    for (int j = 0; j < k - M; ++j) BwF.col(j) = prob.Bw.col(free_cols[static_cast<size_t>(j)]);

    Mat Bv2 = prob.Bv + BwE * Ev;
    Mat Bw2 = BwF + BwE * Ef;
    Mat XiF = select_unconstrained(Bv2, Bw2, prob.nu, prob.p);
    Mat XiE = Ev + Ef * XiF;

    Mat Xi = Mat::Zero(k, nv);
    for (int j = 0; j < M; ++j) Xi.row(elim[static_cast<size_t>(j)]) = XiE.row(j);
    for (int j = 0; j < k - M; ++j) Xi.row(free_cols[static_cast<size_t>(j)]) = XiF.row(j);
    return Xi;
}

}  // namespace sumext
