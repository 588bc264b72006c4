#include "stochstab/grassmann.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

namespace stochstab {

namespace {
constexpr double kTransversalTol = 1e-10;
constexpr double kEscapeCondition = 1e12;

double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin < kSingularFloor) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}
}  // namespace

Chart::Chart(Subspace f_, Subspace e_) : f(std::move(f_)), e(std::move(e_)) {
    if (f.ambient_dim() != e.ambient_dim())
        throw DimensionMismatch("chart: ambient dimensions differ");
    if (f.dim() + e.dim() != f.ambient_dim())
        throw DimensionMismatch("chart: dim F + dim E must equal d");
    Matrix m(f.ambient_dim(), f.ambient_dim());
    m.leftCols(f.dim()) = f.basis();
    m.rightCols(e.dim()) = e.basis();
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues()(f.ambient_dim() - 1) <= kTransversalTol)
        throw TransversalityFailure("chart: F and E are not transversal");
}

bool Chart::orthogonal() const {
    return (f.basis().transpose() * e.basis()).cwiseAbs().maxCoeff() < 1e-10;
}

ChartMatrix to_chart(const Subspace& v, const Chart& chart) {
    const int d = chart.ambient_dim();
    const int j = chart.j();
    if (v.ambient_dim() != d)
        throw DimensionMismatch("to_chart: ambient dimensions differ");
    if (v.dim() != j)
        throw DimensionMismatch("to_chart: V must have the chart dimension");
    // Solve [Vb | -E] [C; B] = F columnwise; solvable iff V and E are
    // transversal.
    Matrix m(d, d);
    m.leftCols(j) = v.basis();
    m.rightCols(d - j) = -chart.e.basis();
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(d - 1) <= kTransversalTol)
        throw TransversalityFailure("to_chart: V meets the chart complement E");
    const Matrix sol = svd.solve(chart.f.basis());
    return ChartMatrix{sol.bottomRows(d - j)};
}

Subspace from_chart(const ChartMatrix& bm, const Chart& chart) {
    const Matrix vectors = chart.f.basis() + chart.e.basis() * bm.b;
    return Subspace::span_of(vectors);
}

double perp_from_chart(const Matrix& b) {
    const double nb = operator_norm(b);
    return std::sqrt(1.0 - nb / std::sqrt(1.0 + nb * nb));
}

double perp_from_chart(const ChartMatrix& bm, const Chart& chart) {
    if (!chart.orthogonal())
        throw DimensionMismatch(
            "perp_from_chart: chart bases must be orthogonal complements");
    return perp_from_chart(bm.b);
}

Matrix BlockTransfer::assembled() const {
    const int d = dim();
    const int jj = j();
    Matrix m(d, d);
    m.topLeftCorner(jj, jj) = w;
    m.topRightCorner(jj, d - jj) = x;
    m.bottomLeftCorner(d - jj, jj) = y;
    m.bottomRightCorner(d - jj, d - jj) = z;
    return m;
}

BlockTransfer BlockTransfer::from_matrix(const Matrix& m, int j) {
    const int d = static_cast<int>(m.rows());
    if (m.cols() != d || j < 1 || j >= d)
        throw DimensionMismatch("BlockTransfer: need square matrix and 1 <= j < d");
    return {m.topLeftCorner(j, j), m.topRightCorner(j, d - j),
            m.bottomLeftCorner(d - j, j), m.bottomRightCorner(d - j, d - j)};
}

Matrix flt_apply(const BlockTransfer& t, const Matrix& b0) {
    const Matrix denom = t.w + t.x * b0;
    if (condition_number(denom) > kEscapeCondition)
        throw ChartEscape("flt_apply: W + X B0 is singular; image leaves the chart");
    return (t.y + t.z * b0) * denom.partialPivLu().inverse();
}

ChartMatrix flt_apply(const BlockTransfer& t, const ChartMatrix& b0) {
    return ChartMatrix{flt_apply(t, b0.b)};
}

BlockTransfer flt_compose(const BlockTransfer& t2, const BlockTransfer& t1) {
    return BlockTransfer::from_matrix(t2.assembled() * t1.assembled(), t1.j());
}

Matrix schur_complement(const BlockTransfer& t) {
    if (condition_number(t.w) > kEscapeCondition)
        throw DimensionMismatch("schur_complement: W is singular");
    return t.z - t.y * t.w.partialPivLu().solve(t.x);
}

BlockTransfer TransferChain::accumulated(std::size_t k) const {
    BlockTransfer acc = blocks.at(0);
    for (std::size_t i = 1; i < k; ++i) acc = flt_compose(blocks[i], acc);
    return acc;
}

TransferChain build_transfer_chain(const SequenceView& seq, std::int64_t t0, int j,
                                   std::int64_t N, int n_blocks, double gap_tol) {
    if (n_blocks < 1) throw DimensionMismatch("transfer chain needs n_blocks >= 1");
    TransferChain chain;
    chain.j = j;

    // SVDs of the n_blocks + 1 consecutive blocks C_0 .. C_{n_blocks}.
    std::vector<SingularTriple> svds;
    std::vector<double> logscales;
    for (int i = 0; i <= n_blocks; ++i) {
        const ScaledBlock blk = scaled_block(seq, t0 + i * N, N);
        SingularTriple t = svd_triple(blk.b);
        const double sj = t.s(j - 1), sj1 = t.s(j);
        const double ratio = (sj1 < kSingularFloor)
                                 ? std::numeric_limits<double>::infinity()
                                 : sj / sj1;
        if (!(ratio > 1.0 + gap_tol)) throw DegenerateGap(ratio);
        svds.push_back(std::move(t));
        logscales.push_back(blk.logscale);
    }

    const int d = seq.d;
    for (int i = 0; i <= n_blocks; ++i)
        chain.charts.emplace_back(Subspace(svds[i].v.leftCols(j)),
                                  Subspace(svds[i].v.rightCols(d - j)));

    for (int i = 0; i < n_blocks; ++i) {
        // P_i: image frame of C_i expressed in the right-singular frame of
        // C_{i+1}; R_i: the singular values of C_i (scaled copy).
        const Matrix p = svds[i + 1].v.transpose() * svds[i].u;
        const Matrix q = p * svds[i].s.asDiagonal();
        chain.blocks.push_back(BlockTransfer::from_matrix(q, j));
        chain.logscales.push_back(logscales[i]);
    }
    return chain;
}

TransferChain build_transfer_chain(const CocycleSystem& sys,
                                   const NoiseRealization& noise, OrbitPoint w,
                                   int j, std::int64_t N, int n_blocks) {
    return build_transfer_chain(perturbed_view(sys, noise), w.time, j, N, n_blocks);
}

ChartMatrix b0_from_perturbation(const Matrix& a_minus1, const Matrix& delta,
                                 double epsilon, const Subspace& v_fast_prev,
                                 const Chart& chart0) {
    const Matrix pushed = (a_minus1 + epsilon * delta) * v_fast_prev.basis();
    const Matrix z1 = chart0.f.basis().transpose() * pushed;
    const Matrix z2 = chart0.e.basis().transpose() * pushed;
    if (condition_number(z1) > kEscapeCondition)
        throw ChartEscape("b0_from_perturbation: F^T (A + eps Delta) V is singular");
    return ChartMatrix{z2 * z1.partialPivLu().inverse()};
}

}  // namespace stochstab
