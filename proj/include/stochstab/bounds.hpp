#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stochstab/subspace_geometry.hpp"

namespace stochstab {

/// Adaptive-quadrature result with an accumulated error estimate.
struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive Simpson quadrature of f over [a, b].  Integrands with
/// logarithmic singularities should be floored (see safe_log) and their
/// singular abscissae passed as breakpoints so each piece is refined
/// separately.  The depth cap keeps panel widths far above the ulp scale,
/// where rounding makes log-type integrands erratic; truncation near a
/// log singularity enters the error estimate at ~width |log width|.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-9, int max_depth = 30);

QuadResult integrate_with_breakpoints(const std::function<double(double)>& f,
                                      double a, double b,
                                      std::vector<double> breakpoints,
                                      double abs_tol = 1e-9);

/// log(max(|x|, 1e-300)): the floor keeps log-singular integrands finite at
/// their roots; the clipped mass is immeasurably small.
double safe_log(double x);

/// Scan [a, b] for local minima of |f| below `threshold` x max; used to
/// split quadrature intervals at near-roots of matrix-norm integrands.
std::vector<double> detect_near_zeros(const std::function<double(double)>& f,
                                      double a, double b, int grid = 256,
                                      double threshold = 1e-3);

/// One verified integral inequality.
struct IntegralBoundReport {
    std::string lemma_id;
    std::string parameters;
    double observed_min = 0.0;       // quadrature / Monte Carlo value
    double claimed_bound = 0.0;
    double margin = 0.0;             // observed - claimed
    double quadrature_error_estimate = 0.0;
    bool pass = false;
    bool vacuous = false;            // bound holds for structural reasons
};

/// inf over z in (0, 2] of (1/z) Integral_0^z log^-|1 - y| dy, by adaptive
/// quadrature and one-dimensional minimization.  The universal constant of
/// the linear bound; approximately -1.27846.
double compute_constant_B();

/// The cached value of compute_constant_B().
double constant_B();

/// Integral_0^1 t^l log|1 - t z| dt >= B for complex z.
IntegralBoundReport verify_linear_bound(std::complex<double> z, int l);

/// Integral_0^1 t^l (log|p(t)| - log|p(0)|) dt >= B deg(p) with
/// p(t) = prod (t - r_i) built from the given roots; no root may be 0.
IntegralBoundReport verify_poly_bound(const std::vector<std::complex<double>>& roots,
                                      int l);

/// Integral_0^1 t^l (log||P(t)|| - log||P(0)||) dt >= B deg(P) for the
/// matrix polynomial P(t) = sum_k coeffs[k] t^k.
IntegralBoundReport verify_operator_bound(const std::vector<Matrix>& coeffs, int l);

/// Integral_0^1 t^l (log||Lambda^j(L(A+tM)R)|| - log||Lambda^j(LAR)||) dt
/// >= j B, evaluated through the compound-matrix operation.
IntegralBoundReport verify_magic_bound(const Matrix& l_factor, const Matrix& m_factor,
                                       const Matrix& a, const Matrix& r_factor,
                                       int j, int l);

/// Monte Carlo estimate of the expected bad-block cost
///   E[ Xi_j(A_n^eps ... A_1^eps) - Xi_j(A_n ... A_1) ]
/// over independent operator-ball perturbations, checked against the
/// universal bound -1.28 d^2 n j (minus 3 standard errors).
struct MonteCarloBoundReport {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double claimed_bound = 0.0;
    bool pass = false;
    bool vacuous = false;  // unperturbed Xi_j = -inf: perturbation only helps
    int n_samples = 0;
};

MonteCarloBoundReport estimate_bad_block_cost(const std::vector<Matrix>& a_list,
                                              double epsilon, int j, int n_samples,
                                              std::uint64_t seed);

/// Per-epsilon glue costs E[Xi_j(L(A+eps Delta)R)] - Xi_j(L) - Xi_j(R) with a
/// least-squares fit of the shape c0 + K log(eps).
struct GlueCostReport {
    std::vector<double> epsilons;
    std::vector<double> estimates;
    std::vector<double> stderrs;
    double k_fit = 0.0;
    double k_fit_stderr = 0.0;
    double c0_fit = 0.0;
    bool pass = false;  // every estimate >= c0 + K log eps - 3 se, K >= 0
};

GlueCostReport estimate_glue_cost(const Matrix& l_factor, const Matrix& a,
                                  const Matrix& r_factor, int j,
                                  const std::vector<double>& epsilon_list,
                                  int n_samples, std::uint64_t seed);

}  // namespace stochstab
