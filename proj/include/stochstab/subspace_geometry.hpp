#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stochstab/errors.hpp"

namespace stochstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values below this are treated as exact zeros.
inline constexpr double kSingularFloor = 1e-300;

/// Default relative tolerance for singular-value gap checks.
inline constexpr double kDefaultGapTol = 1e-8;

/// A k-dimensional linear subspace of R^d, held as a d x k matrix with
/// orthonormal columns.  The basis is part of the value: two Subspace objects
/// may describe the same subspace with different bases.
class Subspace {
public:
    /// Takes ownership of an already-orthonormal basis; throws
    /// DimensionMismatch if the columns are not orthonormal to 1e-10 or the
    /// dimensions are out of range.
    explicit Subspace(Matrix basis);

    /// Orthonormalizes the column span of `vectors` (must have full column
    /// rank).
    static Subspace span_of(const Matrix& vectors);

    /// Span of coordinate axes e_{i} for i in `axes` (0-based).
    static Subspace coordinate_axes(int d, const std::vector<int>& axes);

    int ambient_dim() const { return static_cast<int>(basis_.rows()); }
    int dim() const { return static_cast<int>(basis_.cols()); }
    const Matrix& basis() const { return basis_; }

    /// Orthogonal projector onto the subspace (d x d).
    Matrix projector() const { return basis_ * basis_.transpose(); }

    Subspace orthogonal_complement() const;

private:
    Matrix basis_;
};

/// Full SVD A = u * diag(s) * v^T with nonincreasing s and a deterministic
/// sign convention: the first nonvanishing component of every right singular
/// vector is positive.
struct SingularTriple {
    Matrix u;
    Vector s;
    Matrix v;

    /// Reconstruction residual ||u diag(s) v^T - A||.
    double reconstruction_error(const Matrix& a) const;
};

SingularTriple svd_triple(const Matrix& a);

/// Largest singular value.
double operator_norm(const Matrix& a);

/// Distance between equal-dimensional subspaces: the Hausdorff distance
/// between their unit balls, computed as the operator norm of the difference
/// of orthogonal projectors (equivalently, the sine of the largest principal
/// angle).  A metric on each Grassmannian.
double angle(const Subspace& u, const Subspace& v);

/// Complementarity measure in [0,1]:
///   perp(U,W) = (1/sqrt 2) inf ||u - w||  over unit u in U, w in W
///             = sqrt(1 - sigma_max(U^T W)).
/// 0 when the spaces intersect nontrivially, 1 when mutually orthogonal.
/// Defined for any pair of subspaces with equal ambient dimension.
double perp(const Subspace& u, const Subspace& w);

/// Sum of the logs of the top j singular values of A; -infinity when the
/// j-th singular value is (numerically) zero.
double xi(const Matrix& a, int j);

/// The j-th compound matrix: entry (I,J) is the j x j minor of A with row
/// set I and column set J, index sets ordered lexicographically.  This is
/// the matrix of the exterior power of A in the standard basis, so its
/// operator norm is s_1(A) ... s_j(A).
Matrix compound(const Matrix& a, int j);

/// Lexicographically ordered j-element subsets of {0, ..., d-1}.
std::vector<std::vector<int>> index_subsets(int d, int j);

/// Span of the (j+1)-st through d-th right singular vectors of A.  Requires
/// the relative gap s_j/s_{j+1} > 1 + gap_tol (s_{j+1} = 0 counts as an
/// infinite ratio); throws DegenerateGap otherwise.
Subspace bottom_space(const Matrix& a, int j, double gap_tol = kDefaultGapTol);

/// Span of the images under A of the top j right singular vectors, i.e. the
/// top j left singular vectors.  Throws DegenerateGap as above and
/// RankDeficient when s_j = 0.
Subspace top_space(const Matrix& a, int j, double gap_tol = kDefaultGapTol);

}  // namespace stochstab
