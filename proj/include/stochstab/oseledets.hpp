#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochstab/cocycle.hpp"
#include "stochstab/subspace_geometry.hpp"

namespace stochstab {

struct SpectrumOptions {
    /// Steps between QR renormalizations of the accumulated product.
    int renorm_period = 10;
    /// Exponents closer than this are merged into one Lyapunov group;
    /// <= 0 selects 0.05 x (spread of the finite exponents).
    double group_tol = 0.0;
    /// Number of contiguous blocks used for the resampling stderr.
    int resample_blocks = 20;
    /// A renormalization-chunk diagonal is treated as a collapse to rank
    /// deficiency when it falls below this fraction of the chunk's largest
    /// diagonal AND the chunk contained a numerically rank-deficient step.
    double rank_collapse_rel = 1e-10;
    /// Average log-growth below this per step is reported as -infinity.
    double neg_inf_rate = -500.0;
};

struct LyapunovGroup {
    double exponent;  // -inf allowed
    int multiplicity;
};

struct SpectrumReport {
    std::vector<double> exponents;     // mu_1 >= ... >= mu_d (-inf at the end)
    std::vector<double> stderrs;       // per index, block-resampling estimate
    std::vector<LyapunovGroup> grouped;
    std::int64_t n_used = 0;
    bool resolution_warning = false;   // n too small to resolve group gaps

    int dim() const { return static_cast<int>(exponents.size()); }
    /// Cumulative multiplicities D_1 < D_2 < ... (group boundaries).
    std::vector<int> boundaries() const;
    double min_finite_gap() const;     // min over adjacent finite groups
};

/// Lyapunov spectrum of an arbitrary matrix sequence over [t0, t0 + n) via
/// QR accumulation: the product is renormalized every renorm_period steps
/// and the exponents are the per-step averages of log |R_ii|.
SpectrumReport spectrum_of_sequence(const SequenceView& seq, std::int64_t t0,
                                    std::int64_t n, const SpectrumOptions& opts = {});

SpectrumReport estimate_spectrum(const CocycleSystem& sys, OrbitPoint w,
                                 std::int64_t n, double group_tol = 0.0);

/// Block product with scalar overflow control: the true block equals
/// exp(logscale) * b, and b has moderate norm.  Singular subspaces and
/// singular-value ratios of the block coincide with those of b.
struct ScaledBlock {
    Matrix b;
    double logscale = 0.0;
    /// log s_i of the underlying block (-inf below the floor).
    std::vector<double> log_singular_values() const;
};

ScaledBlock scaled_block(const SequenceView& seq, std::int64_t t0, std::int64_t n);

/// E_j estimate: bottom space of the forward block A^(n) starting at t0.
Subspace slow_space(const SequenceView& seq, std::int64_t t0, int j,
                    std::int64_t n, double gap_tol = kDefaultGapTol);
Subspace slow_space(const CocycleSystem& sys, OrbitPoint w, int j, std::int64_t n);

/// F_j estimate: top space of the block of length n ending at t0, i.e. of
/// A^(n)(sigma^{-n} w).
Subspace fast_space(const SequenceView& seq, std::int64_t t0, int j,
                    std::int64_t n, double gap_tol = kDefaultGapTol);
Subspace fast_space(const CocycleSystem& sys, OrbitPoint w, int j, std::int64_t n);

/// Space estimate with a convergence certificate: the angle between the
/// length-n and length-2n estimates.
struct CertifiedSubspace {
    Subspace space;
    double certificate_angle;
};
CertifiedSubspace slow_space_certified(const SequenceView& seq, std::int64_t t0,
                                       int j, std::int64_t n);
CertifiedSubspace fast_space_certified(const SequenceView& seq, std::int64_t t0,
                                       int j, std::int64_t n);

/// Oblique projection onto F along its complement E (F and E transversal
/// with dim F + dim E = d); throws DimensionMismatch if near-degenerate.
Matrix oblique_projector(const Subspace& f, const Subspace& e);

/// Orthonormalized image of a subspace under a linear map; the image must
/// have the expected rank (RankDeficient otherwise).  Used for Oseledets
/// components, whose defining projections drop dimension by construction.
Subspace projected_component(const Matrix& map, const Subspace& v, int expected_dim);

struct SplittingReport {
    std::vector<int> boundaries;        // D_1 .. D_{p-1}
    std::vector<Subspace> fast;         // F_{D_i}
    std::vector<Subspace> slow;         // E_{D_i}
    std::vector<Subspace> components;   // Y_1 .. Y_p
    std::vector<double> perps;          // perp(E_{D_i}, F_{D_i})
    SpectrumReport spectrum;
};

/// Oseledets components over the sequence, at block length n:
///   Y_i = Pr_{F_i || E_i}(E_{i-1}),   Y_1 = F_{D_1},  Y_p = E_{D_{p-1}}.
SplittingReport splitting_of_sequence(const SequenceView& seq, std::int64_t t0,
                                      std::int64_t n, const SpectrumOptions& opts = {});
SplittingReport splitting(const CocycleSystem& sys, OrbitPoint w, std::int64_t n);

/// Good-block conditions of the block [t0, t0+N) at split index j, checked
/// against reference Oseledets spaces resolved at ref_factor x N:
///  (a) perp(E_j(w), F_j(w)) > 10 kappa
///  (b) angle(top(A^(N)), F_j(sigma^N w)) < delta
///  (c) angle(bottom(A^(N)), E_j(w)) < delta
///  (d) s_j/s_{j+1} > K and s_j > K.
struct GoodBlockDiagnostics {
    bool good = false;
    bool cond_a = false, cond_b = false, cond_c = false, cond_d = false;
    double perp_ef = 0.0;
    double angle_top = 0.0, angle_bottom = 0.0;
    double log_sj = 0.0, log_ratio = 0.0;
};

GoodBlockDiagnostics classify_good_block(const CocycleSystem& sys, OrbitPoint w,
                                         int j, std::int64_t N, double kappa,
                                         double delta, double K_threshold,
                                         int ref_factor = 8);

}  // namespace stochstab
