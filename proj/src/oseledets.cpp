#include "stochstab/oseledets.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stochstab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Raw products lose the trailing singular directions once the accumulated
// spread of exponents exceeds the double-precision budget (~36 nats).
// Windows up to this many steps are handled with one block SVD (exact
// finite-n semantics); longer windows use the QR-sweep form below.
constexpr std::int64_t kRawWindowHorizon = 32;

// Per-step condition probe: marks numerically rank-deficient steps (s_min
// below 1e-12 of s_max) and reports the step's log dynamic range, used to
// cap renormalization chunks so the accumulated range stays well inside
// double precision.
struct StepProbe {
    bool deficient;
    double log_range;
};

StepProbe probe_step(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    const bool deficient = smax < kSingularFloor || smin < 1e-12 * smax;
    const double range = std::log(std::max(smax, kSingularFloor) /
                                  std::max(smin, kSingularFloor));
    return {deficient, range};
}

// Accumulated per-chunk log-range budget (nats).  A chunk whose factors
// jointly exceed it would push the trailing diagonal of R below the
// round-off floor relative to the leading one.
constexpr double kChunkRangeBudget = 20.0;

// QR accumulation of factor(n-1) ... factor(0): the frame q carries the
// ordered image directions and logsum the per-index log growth; dead marks
// directions annihilated by rank-deficient steps.  This is the numerically
// sound route to singular frames of long products.
struct QrSweep {
    Matrix q;
    std::vector<double> logsum;
    std::vector<bool> dead;
    std::vector<std::vector<double>> increments;  // per chunk, per index
};

QrSweep qr_accumulate(const std::function<Matrix(std::int64_t)>& factor,
                      std::int64_t n, int d, int renorm_period,
                      double collapse_rel) {
    QrSweep sw;
    sw.q = Matrix::Identity(d, d);
    sw.logsum.assign(d, 0.0);
    sw.dead.assign(d, false);
    sw.increments.resize(d);
    std::int64_t t = 0;
    while (t < n) {
        Matrix p = factor(t);
        StepProbe probe = probe_step(p);
        bool chunk_deficient = probe.deficient;
        double range = probe.log_range;
        std::int64_t chunk = 1;
        while (t + chunk < n && chunk < renorm_period &&
               range < kChunkRangeBudget) {
            const Matrix a = factor(t + chunk);
            probe = probe_step(a);
            chunk_deficient = chunk_deficient || probe.deficient;
            range += probe.log_range;
            p = a * p;
            ++chunk;
        }
        Matrix z = p * sw.q;
        Eigen::HouseholderQR<Matrix> qr(z);
        sw.q = qr.householderQ() * Matrix::Identity(d, d);
        const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        double rmax = 0.0;
        for (int i = 0; i < d; ++i) rmax = std::max(rmax, std::abs(r(i, i)));
        for (int i = 0; i < d; ++i) {
            const double rii = std::abs(r(i, i));
            if (r(i, i) < 0.0) sw.q.col(i) = -sw.q.col(i);
            const bool collapsed =
                rii < kSingularFloor ||
                (chunk_deficient && rii < collapse_rel * rmax);
            if (collapsed) sw.dead[i] = true;
            if (sw.dead[i]) continue;
            const double inc = std::log(rii);
            sw.logsum[i] += inc;
            sw.increments[i].push_back(inc);
        }
        t += chunk;
    }
    return sw;
}

// Relative gap check at index j from sweep log-growths: s_j / s_{j+1} must
// exceed 1 + gap_tol.
void check_sweep_gap(const QrSweep& sw, int j, double gap_tol) {
    const int d = static_cast<int>(sw.logsum.size());
    if (j < 1 || j >= d)
        throw DimensionMismatch("split index j must satisfy 1 <= j < d");
    if (sw.dead[j]) return;  // infinite ratio
    if (sw.dead[j - 1]) throw DegenerateGap(0.0);
    const double log_ratio = sw.logsum[j - 1] - sw.logsum[j];
    if (!(log_ratio > std::log1p(gap_tol))) throw DegenerateGap(std::exp(log_ratio));
}
}  // namespace

std::vector<int> SpectrumReport::boundaries() const {
    std::vector<int> out;
    int acc = 0;
    for (std::size_t i = 0; i + 1 < grouped.size(); ++i) {
        acc += grouped[i].multiplicity;
        out.push_back(acc);
    }
    return out;
}

double SpectrumReport::min_finite_gap() const {
    double gap = kInf;
    for (std::size_t i = 0; i + 1 < grouped.size(); ++i) {
        if (std::isinf(grouped[i].exponent) || std::isinf(grouped[i + 1].exponent))
            continue;
        gap = std::min(gap, grouped[i].exponent - grouped[i + 1].exponent);
    }
    return gap;
}

SpectrumReport spectrum_of_sequence(const SequenceView& seq, std::int64_t t0,
                                    std::int64_t n, const SpectrumOptions& opts) {
    const int d = seq.d;
    if (n < 1) throw DimensionMismatch("spectrum: n must be >= 1");

    const QrSweep sw = qr_accumulate(
        [&](std::int64_t t) { return seq.at(t0 + t); }, n, d,
        opts.renorm_period, opts.rank_collapse_rel);

    std::vector<double> mu(d), se(d, 0.0);
    for (int i = 0; i < d; ++i) {
        mu[i] = sw.dead[i] ? -kInf : sw.logsum[i] / static_cast<double>(n);
        if (mu[i] < opts.neg_inf_rate) mu[i] = -kInf;
        if (std::isinf(mu[i])) continue;
        // Block-resampling stderr over contiguous chunk groups.
        const auto& inc = sw.increments[i];
        const int nb = std::min<int>(opts.resample_blocks, static_cast<int>(inc.size()));
        if (nb >= 2) {
            const std::size_t per = inc.size() / nb;
            std::vector<double> means;
            means.reserve(nb);
            for (int b = 0; b < nb; ++b) {
                const std::size_t lo = b * per;
                const std::size_t hi = (b == nb - 1) ? inc.size() : lo + per;
                double s = std::accumulate(inc.begin() + lo, inc.begin() + hi, 0.0);
                // Per-step mean within the resampling block.
                const double steps =
                    static_cast<double>(hi - lo) * static_cast<double>(n) /
                    static_cast<double>(inc.size());
                means.push_back(s / steps);
            }
            double m = std::accumulate(means.begin(), means.end(), 0.0) / nb;
            double var = 0.0;
            for (double x : means) var += (x - m) * (x - m);
            var /= (nb - 1);
            se[i] = std::sqrt(var / nb);
        }
    }

    // Sort nonincreasing, -inf last; keep stderr attached to its exponent.
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::isinf(mu[a]) != std::isinf(mu[b])) return !std::isinf(mu[a]);
        return mu[a] > mu[b];
    });
    SpectrumReport rep;
    rep.n_used = n;
    rep.exponents.resize(d);
    rep.stderrs.resize(d);
    for (int i = 0; i < d; ++i) {
        rep.exponents[i] = mu[order[i]];
        rep.stderrs[i] = se[order[i]];
    }

    // Group exponents within group_tol.
    double tol = opts.group_tol;
    if (tol <= 0.0) {
        double hi = -kInf, lo = kInf;
        for (double m : rep.exponents)
            if (!std::isinf(m)) {
                hi = std::max(hi, m);
                lo = std::min(lo, m);
            }
        tol = (std::isinf(hi) || hi == lo) ? 1e-9 : 0.05 * (hi - lo);
    }
    for (int i = 0; i < d;) {
        if (std::isinf(rep.exponents[i])) {
            rep.grouped.push_back({-kInf, d - i});
            break;
        }
        int k = i + 1;
        double sum = rep.exponents[i];
        while (k < d && !std::isinf(rep.exponents[k]) &&
               rep.exponents[k - 1] - rep.exponents[k] < tol) {
            sum += rep.exponents[k];
            ++k;
        }
        rep.grouped.push_back({sum / (k - i), k - i});
        i = k;
    }

    // Warn when the resolved gaps are not clearly separated from the noise.
    double max_se = 0.0;
    for (int i = 0; i < d; ++i)
        if (!std::isinf(rep.exponents[i])) max_se = std::max(max_se, rep.stderrs[i]);
    const double gap = rep.min_finite_gap();
    rep.resolution_warning = std::isfinite(gap) && gap < 3.0 * max_se;
    return rep;
}

SpectrumReport estimate_spectrum(const CocycleSystem& sys, OrbitPoint w,
                                 std::int64_t n, double group_tol) {
    SpectrumOptions opts;
    opts.group_tol = group_tol;
    return spectrum_of_sequence(view(sys), w.time, n, opts);
}

std::vector<double> ScaledBlock::log_singular_values() const {
    Eigen::JacobiSVD<Matrix> svd(b);
    std::vector<double> out;
    out.reserve(b.rows());
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        const double s = svd.singularValues()(i);
        out.push_back(s < kSingularFloor ? -kInf : std::log(s) + logscale);
    }
    return out;
}

ScaledBlock scaled_block(const SequenceView& seq, std::int64_t t0, std::int64_t n) {
    if (n < 1) throw DimensionMismatch("scaled_block: n must be >= 1");
    ScaledBlock out;
    out.b = seq.at(t0);
    for (std::int64_t k = 1; k < n; ++k) {
        out.b = seq.at(t0 + k) * out.b;
        const double m = out.b.cwiseAbs().maxCoeff();
        if (m > 1e100 || (m > 0.0 && m < 1e-100)) {
            out.b /= m;
            out.logscale += std::log(m);
        }
    }
    return out;
}

Subspace slow_space(const SequenceView& seq, std::int64_t t0, int j,
                    std::int64_t n, double gap_tol) {
    if (n <= kRawWindowHorizon)
        return bottom_space(scaled_block(seq, t0, n).b, j, gap_tol);
    // The bottom right-singular frame of the block is the top left-singular
    // frame of its transpose; sweep over the transposed factors in reverse.
    const QrSweep sw = qr_accumulate(
        [&](std::int64_t k) { return Matrix(seq.at(t0 + n - 1 - k).transpose()); },
        n, seq.d, 8, 1e-10);
    check_sweep_gap(sw, j, gap_tol);
    return Subspace(sw.q.rightCols(seq.d - j));
}

Subspace slow_space(const CocycleSystem& sys, OrbitPoint w, int j, std::int64_t n) {
    return slow_space(view(sys), w.time, j, n);
}

Subspace fast_space(const SequenceView& seq, std::int64_t t0, int j,
                    std::int64_t n, double gap_tol) {
    if (n <= kRawWindowHorizon)
        return top_space(scaled_block(seq, t0 - n, n).b, j, gap_tol);
    const QrSweep sw = qr_accumulate(
        [&](std::int64_t k) { return seq.at(t0 - n + k); }, n, seq.d, 8, 1e-10);
    check_sweep_gap(sw, j, gap_tol);
    if (sw.dead[j - 1])
        throw RankDeficient("fast_space: the block kills the fast directions");
    return Subspace(sw.q.leftCols(j));
}

Subspace fast_space(const CocycleSystem& sys, OrbitPoint w, int j, std::int64_t n) {
    return fast_space(view(sys), w.time, j, n);
}

CertifiedSubspace slow_space_certified(const SequenceView& seq, std::int64_t t0,
                                       int j, std::int64_t n) {
    Subspace at_n = slow_space(seq, t0, j, n);
    Subspace at_2n = slow_space(seq, t0, j, 2 * n);
    return {at_n, angle(at_n, at_2n)};
}

CertifiedSubspace fast_space_certified(const SequenceView& seq, std::int64_t t0,
                                       int j, std::int64_t n) {
    Subspace at_n = fast_space(seq, t0, j, n);
    Subspace at_2n = fast_space(seq, t0, j, 2 * n);
    return {at_n, angle(at_n, at_2n)};
}

Matrix oblique_projector(const Subspace& f, const Subspace& e) {
    const int d = f.ambient_dim();
    const int j = f.dim();
    if (e.ambient_dim() != d || f.dim() + e.dim() != d)
        throw DimensionMismatch("oblique_projector: F and E must be complementary");
    if (perp(f, e) < 1e-6)
        throw DimensionMismatch("oblique_projector: near-degenerate F/E pair");
    Matrix m(d, d);
    m.leftCols(j) = f.basis();
    m.rightCols(d - j) = e.basis();
    const Matrix minv = m.partialPivLu().inverse();
    return f.basis() * minv.topRows(j);
}

Subspace projected_component(const Matrix& map, const Subspace& v, int expected_dim) {
    const Matrix img = map * v.basis();
    Eigen::JacobiSVD<Matrix> svd(img, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * s(0)) ++rank;
    if (rank != expected_dim)
        throw RankDeficient("projected component has rank " + std::to_string(rank) +
                            ", expected " + std::to_string(expected_dim));
    return Subspace(svd.matrixU().leftCols(expected_dim));
}

SplittingReport splitting_of_sequence(const SequenceView& seq, std::int64_t t0,
                                      std::int64_t n, const SpectrumOptions& opts) {
    SplittingReport rep;
    rep.spectrum = spectrum_of_sequence(seq, t0, n, opts);
    rep.boundaries = rep.spectrum.boundaries();
    const int d = seq.d;

    for (int j : rep.boundaries) {
        rep.fast.push_back(fast_space(seq, t0, j, n));
        rep.slow.push_back(slow_space(seq, t0, j, n));
        rep.perps.push_back(perp(rep.slow.back(), rep.fast.back()));
    }

    const int p = static_cast<int>(rep.spectrum.grouped.size());
    for (int i = 0; i < p; ++i) {
        if (i == 0) {
            rep.components.push_back(p == 1
                                         ? Subspace(Matrix::Identity(d, d))
                                         : rep.fast.front());
            continue;
        }
        const Subspace& prev_slow = rep.slow[i - 1];
        if (i == p - 1) {
            // Last component: E_{p-1} itself (F_p is the whole space).
            rep.components.push_back(prev_slow);
            continue;
        }
        const Matrix pr = oblique_projector(rep.fast[i], rep.slow[i]);
        rep.components.push_back(
            projected_component(pr, prev_slow, rep.spectrum.grouped[i].multiplicity));
    }
    return rep;
}

SplittingReport splitting(const CocycleSystem& sys, OrbitPoint w, std::int64_t n) {
    return splitting_of_sequence(view(sys), w.time, n);
}

GoodBlockDiagnostics classify_good_block(const CocycleSystem& sys, OrbitPoint w,
                                         int j, std::int64_t N, double kappa,
                                         double delta, double K_threshold,
                                         int ref_factor) {
    GoodBlockDiagnostics diag;
    const SequenceView v = view(sys);
    const std::int64_t ref_n = ref_factor * N;
    const double log_k = std::log(K_threshold);
    try {
        const Subspace e_ref = slow_space(v, w.time, j, ref_n);
        const Subspace f_ref = fast_space(v, w.time, j, ref_n);
        const Subspace f_ref_shift = fast_space(v, w.time + N, j, ref_n);

        diag.perp_ef = perp(e_ref, f_ref);
        diag.cond_a = diag.perp_ef > 10.0 * kappa;

        std::vector<double> logs;
        if (N <= kRawWindowHorizon) {
            logs = scaled_block(v, w.time, N).log_singular_values();
        } else {
            const QrSweep sw = qr_accumulate(
                [&](std::int64_t k) { return v.at(w.time + k); }, N, sys.dim(),
                8, 1e-10);
            for (int i = 0; i < sys.dim(); ++i)
                logs.push_back(sw.dead[i] ? -kInf : sw.logsum[i]);
            std::sort(logs.begin(), logs.end(), std::greater<double>());
        }
        diag.log_sj = logs[j - 1];
        diag.log_ratio = std::isinf(logs[j]) ? kInf : logs[j - 1] - logs[j];
        diag.cond_d = diag.log_ratio > log_k && diag.log_sj > log_k;

        // Top space of the block [w, w+N) is the fast estimate anchored at
        // w+N; the bottom space is the slow estimate anchored at w.
        diag.angle_top = angle(fast_space(v, w.time + N, j, N), f_ref_shift);
        diag.cond_b = diag.angle_top < delta;
        diag.angle_bottom = angle(slow_space(v, w.time, j, N), e_ref);
        diag.cond_c = diag.angle_bottom < delta;
    } catch (const DegenerateGap&) {
        // Unresolvable gap somewhere: the block is not good.  Partial
        // diagnostics keep whatever was computed before the failure.
        return diag;
    } catch (const RankDeficient&) {
        return diag;
    }
    diag.good = diag.cond_a && diag.cond_b && diag.cond_c && diag.cond_d;
    return diag;
}

}  // namespace stochstab
