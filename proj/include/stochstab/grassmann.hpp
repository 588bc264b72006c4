#pragma once

#include <cstdint>
#include <vector>

#include "stochstab/cocycle.hpp"
#include "stochstab/oseledets.hpp"
#include "stochstab/subspace_geometry.hpp"

namespace stochstab {

/// An (F, E) chart on the Grassmannian of j-dimensional subspaces: F is a
/// j-dimensional subspace with a chosen orthonormal basis, E a complementary
/// (d-j)-dimensional one.  Any V transverse to E has chart matrix B with
/// basis vectors v_k = f_k + sum_i B_{ik} e_i.
struct Chart {
    Subspace f;
    Subspace e;

    Chart(Subspace f_, Subspace e_);
    int ambient_dim() const { return f.ambient_dim(); }
    int j() const { return f.dim(); }
    /// True when F and E are orthogonal complements (perp_from_chart needs it).
    bool orthogonal() const;
};

struct ChartMatrix {
    Matrix b;  // (d-j) x j
};

/// Chart coordinates of V in the given chart; throws TransversalityFailure
/// when V meets E (solve matrix singular beyond 1e-10).
ChartMatrix to_chart(const Subspace& v, const Chart& chart);

/// Subspace spanned by the chart-matrix columns v_k = f_k + E b_k.
Subspace from_chart(const ChartMatrix& bm, const Chart& chart);

/// perp(V, E) = sqrt(1 - ||B|| / sqrt(1 + ||B||^2)) for an orthonormal
/// complementary chart.  The overload taking a chart validates orthogonality.
double perp_from_chart(const Matrix& b);
double perp_from_chart(const ChartMatrix& bm, const Chart& chart);

/// Block decomposition of a d x d transfer matrix between charts:
///   [ W  X ]   with W: j x j, X: j x (d-j),
///   [ Y  Z ]        Y: (d-j) x j, Z: (d-j) x (d-j).
struct BlockTransfer {
    Matrix w, x, y, z;

    int j() const { return static_cast<int>(w.rows()); }
    int dim() const { return static_cast<int>(w.rows() + y.rows()); }
    Matrix assembled() const;
    static BlockTransfer from_matrix(const Matrix& m, int j);
};

/// Fractional linear action on chart matrices:
///   B -> (Y + Z B)(W + X B)^{-1}.
/// Throws ChartEscape when W + X B is singular (condition number beyond
/// 1e12): the image subspace leaves the target chart.
Matrix flt_apply(const BlockTransfer& t, const Matrix& b0);
ChartMatrix flt_apply(const BlockTransfer& t, const ChartMatrix& b0);

/// Composition of chart transfers = product of the assembled matrices.
BlockTransfer flt_compose(const BlockTransfer& t2, const BlockTransfer& t1);

/// Schur complement E = Z - Y W^{-1} X; the unique lower submatrix with
/// assembled(T) [-W^{-1} X; I] = [0; E].  Throws on singular W.
Matrix schur_complement(const BlockTransfer& t);

/// The transfer chain of Q_i = P_i R_i matrices built from consecutive
/// perturbed N-blocks C_0, ..., C_{n_blocks}: R_i carries the singular
/// values of C_i (top j first), P_i is the orthogonal change of frame from
/// C_i's image frame to C_{i+1}'s right-singular frame.  charts[i] is the
/// (bottom(C_i)^perp, bottom(C_i)) chart in which B_i lives; logscales[i]
/// is the scalar pulled out of R_i for overflow control (the fractional
/// linear action is invariant under it).
struct TransferChain {
    int j = 0;
    std::vector<BlockTransfer> blocks;
    std::vector<double> logscales;
    std::vector<Chart> charts;  // size blocks.size() + 1

    /// Accumulated transfer Q_{k-1} ... Q_0 for k = 1..n (k blocks).
    BlockTransfer accumulated(std::size_t k) const;
};

TransferChain build_transfer_chain(const SequenceView& seq, std::int64_t t0, int j,
                                   std::int64_t N, int n_blocks,
                                   double gap_tol = kDefaultGapTol);
TransferChain build_transfer_chain(const CocycleSystem& sys,
                                   const NoiseRealization& noise, OrbitPoint w,
                                   int j, std::int64_t N, int n_blocks);

/// Chart coordinates at time 0 of the image of the previous fast space under
/// the perturbed step A + eps Delta:
///   B0 = (E^T (A + eps Delta) V)(F^T (A + eps Delta) V)^{-1}.
/// Throws ChartEscape when the second factor is singular.
ChartMatrix b0_from_perturbation(const Matrix& a_minus1, const Matrix& delta,
                                 double epsilon, const Subspace& v_fast_prev,
                                 const Chart& chart0);

}  // namespace stochstab
