#include "stochstab/subspace_geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace stochstab {

namespace {
constexpr double kOrthoTol = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
    const int d = static_cast<int>(basis_.rows());
    const int k = static_cast<int>(basis_.cols());
    if (k < 1 || k > d)
        throw DimensionMismatch("subspace dimension out of range: k=" +
                                std::to_string(k) + ", d=" + std::to_string(d));
    const Matrix gram = basis_.transpose() * basis_;
    const double err = (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    if (err > kOrthoTol)
        throw DimensionMismatch("basis columns not orthonormal (defect " +
                                std::to_string(err) + ")");
}

Subspace Subspace::span_of(const Matrix& vectors) {
    Eigen::HouseholderQR<Matrix> qr(vectors);
    const int k = static_cast<int>(vectors.cols());
    Matrix q = qr.householderQ() * Matrix::Identity(vectors.rows(), k);
    // Rank check via the R diagonal.
    const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int i = 0; i < k; ++i)
        if (std::abs(r(i, i)) < 1e-12 * (1.0 + vectors.norm()))
            throw RankDeficient("span_of: input columns are linearly dependent");
    return Subspace(std::move(q));
}

Subspace Subspace::coordinate_axes(int d, const std::vector<int>& axes) {
    Matrix b = Matrix::Zero(d, static_cast<int>(axes.size()));
    for (int c = 0; c < static_cast<int>(axes.size()); ++c) b(axes[c], c) = 1.0;
    return Subspace(std::move(b));
}

Subspace Subspace::orthogonal_complement() const {
    const int d = ambient_dim();
    const int k = dim();
    if (k == d)
        throw DimensionMismatch("orthogonal complement of the full space is trivial");
    // Columns k..d-1 of the full Q factor span the complement.
    Eigen::HouseholderQR<Matrix> qr(basis_);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    return Subspace(q.rightCols(d - k));
}

double SingularTriple::reconstruction_error(const Matrix& a) const {
    return (u * s.asDiagonal() * v.transpose() - a).norm();
}

SingularTriple svd_triple(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SingularTriple t{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    // Sign convention: first component of each right singular vector with
    // magnitude above 1e-14 is made positive, so repeated calls on nearby
    // matrices produce stable bases.
    for (int c = 0; c < t.v.cols(); ++c) {
        for (int r = 0; r < t.v.rows(); ++r) {
            if (std::abs(t.v(r, c)) > 1e-14) {
                if (t.v(r, c) < 0.0) {
                    t.v.col(c) = -t.v.col(c);
                    if (c < t.u.cols()) t.u.col(c) = -t.u.col(c);
                }
                break;
            }
        }
    }
    return t;
}

double operator_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    if (a.rows() <= 3 && a.rows() == a.cols()) {
        // Fast path used in the noise-sampler's rejection loop.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
        Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
        const int n = static_cast<int>(a.rows());
        g.topLeftCorner(n, n) = (a.transpose() * a);
        if (n < 3) {
            g(2, 2) = 0.0;
            if (n < 2) g(1, 1) = 0.0;
        }
        es.computeDirect(g);
        const double lam = es.eigenvalues().maxCoeff();
        return lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

double angle(const Subspace& u, const Subspace& v) {
    if (u.ambient_dim() != v.ambient_dim())
        throw DimensionMismatch("angle: ambient dimensions differ");
    if (u.dim() != v.dim())
        throw DimensionMismatch("angle: subspace dimensions differ");
    return operator_norm(u.projector() - v.projector());
}

double perp(const Subspace& u, const Subspace& w) {
    if (u.ambient_dim() != w.ambient_dim())
        throw DimensionMismatch("perp: ambient dimensions differ");
    const double smax = operator_norm(u.basis().transpose() * w.basis());
    return std::sqrt(std::max(0.0, 1.0 - std::min(1.0, smax)));
}

double xi(const Matrix& a, int j) {
    const int d = static_cast<int>(std::min(a.rows(), a.cols()));
    if (j < 1 || j > d)
        throw DimensionMismatch("xi: index j=" + std::to_string(j) +
                                " out of range for d=" + std::to_string(d));
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    double sum = 0.0;
    for (int i = 0; i < j; ++i) {
        if (s(i) < kSingularFloor) return -kInf;
        sum += std::log(s(i));
    }
    return sum;
}

std::vector<std::vector<int>> index_subsets(int d, int j) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(j);
    for (int i = 0; i < j; ++i) cur[i] = i;
    while (true) {
        out.push_back(cur);
        int i = j - 1;
        while (i >= 0 && cur[i] == d - j + i) --i;
        if (i < 0) break;
        ++cur[i];
        for (int t = i + 1; t < j; ++t) cur[t] = cur[t - 1] + 1;
    }
    return out;
}

Matrix compound(const Matrix& a, int j) {
    const int d = static_cast<int>(a.rows());
    if (a.cols() != d) throw DimensionMismatch("compound: matrix must be square");
    if (j < 1 || j > d)
        throw DimensionMismatch("compound: index j out of range");
    const auto subsets = index_subsets(d, j);
    const int m = static_cast<int>(subsets.size());
    Matrix c(m, m);
    Matrix minor(j, j);
    for (int row = 0; row < m; ++row) {
        for (int col = 0; col < m; ++col) {
            for (int r = 0; r < j; ++r)
                for (int cc = 0; cc < j; ++cc)
                    minor(r, cc) = a(subsets[row][r], subsets[col][cc]);
            c(row, col) = minor.determinant();
        }
    }
    return c;
}

namespace {
// Shared gap check; returns the SVD when s_j/s_{j+1} > 1 + gap_tol.
SingularTriple gap_checked_svd(const Matrix& a, int j, double gap_tol) {
    const int d = static_cast<int>(a.rows());
    if (a.cols() != d) throw DimensionMismatch("singular spaces need a square matrix");
    if (j < 1 || j >= d)
        throw DimensionMismatch("split index j=" + std::to_string(j) +
                                " must satisfy 1 <= j < d");
    SingularTriple t = svd_triple(a);
    const double sj = t.s(j - 1);
    const double sj1 = t.s(j);
    const double ratio = (sj1 < kSingularFloor)
                             ? std::numeric_limits<double>::infinity()
                             : sj / sj1;
    if (!(ratio > 1.0 + gap_tol)) throw DegenerateGap(ratio);
    return t;
}
}  // namespace

Subspace bottom_space(const Matrix& a, int j, double gap_tol) {
    SingularTriple t = gap_checked_svd(a, j, gap_tol);
    const int d = static_cast<int>(a.rows());
    return Subspace(t.v.rightCols(d - j));
}

Subspace top_space(const Matrix& a, int j, double gap_tol) {
    SingularTriple t = gap_checked_svd(a, j, gap_tol);
    if (t.s(j - 1) < kSingularFloor)
        throw RankDeficient("top_space: s_j = 0, the block kills the fast directions");
    return Subspace(t.u.leftCols(j));
}

}  // namespace stochstab
