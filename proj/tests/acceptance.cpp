// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Tolerances are pinned in code; runtime budgets are enforced
// where stated.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "stochstab/bounds.hpp"
#include "stochstab/experiments.hpp"
#include "stochstab/grassmann.hpp"
#include "stochstab/io.hpp"
#include "test_support.hpp"

using namespace stochstab;
using test::random_matrix;
using test::random_subspace;

namespace {

int g_failures = 0;

class Criterion {
public:
    explicit Criterion(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

    void check(bool ok, const std::string& what) {
        if (!ok) {
            failures_.push_back(what);
        }
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start_)
            .count();
    }

    void finish(double budget_seconds = 0.0) {
        const double t = elapsed();
        if (budget_seconds > 0.0 && t > budget_seconds)
            failures_.push_back("runtime " + std::to_string(t) + "s exceeds " +
                                std::to_string(budget_seconds) + "s");
        if (failures_.empty()) {
            std::printf("[PASS] %s (%.2fs)\n", name_.c_str(), t);
        } else {
            ++g_failures;
            std::printf("[FAIL] %s (%.2fs)\n", name_.c_str(), t);
            for (const auto& f : failures_)
                std::printf("       - %s\n", f.c_str());
        }
        std::fflush(stdout);
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> failures_;
};

double fixed_point_oracle() {
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid - 1.0 - std::exp(-mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return -0.5 * (lo + hi);
}

ExperimentConfig showcase_config() {
    ExperimentConfig cfg;
    cfg.epsilon_list = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    cfg.n_trials = 200;
    cfg.seed = 90210;
    cfg.j_index = 1;
    cfg.reference_factor = 8;
    cfg.workers = 0;
    return cfg;
}

// ---------------------------------------------------------------------------

void criterion1_constant_b() {
    Criterion c("C1 constant B reproduction");
    const double b = compute_constant_B();
    const double oracle = fixed_point_oracle();
    c.check(std::abs(b + 1.2785) < 1e-3,
            "B = " + std::to_string(b) + " not within 1e-3 of -1.2785");
    c.check(std::abs(b - oracle) < 1e-6,
            "quadrature B and fixed-point oracle disagree: " +
                std::to_string(b) + " vs " + std::to_string(oracle));
    c.finish(1.0);
}

void criterion2_bound_battery() {
    Criterion c("C2 bound-lemma battery (200 linear, 50 poly, 50 operator, 100 magic)");
    int violations = 0;

    Rng rng(777);
    int linear_count = 0;
    for (double mag : {0.0, 0.1, 0.9, 1.0, 1.5, 2.0, 5.0, 50.0, 1e3, 1e4}) {
        for (int l : {0, 1, 2, 3, 5, 7, 10}) {
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            const std::complex<double> z{mag * std::cos(phase),
                                         mag * std::sin(phase)};
            if (!verify_linear_bound(z, l).pass) ++violations;
            if (!verify_linear_bound({mag, 0.0}, l).pass) ++violations;
            linear_count += 2;
            if (linear_count >= 200) break;
        }
        if (linear_count >= 200) break;
    }
    while (linear_count < 200) {
        const double mag = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
        const std::complex<double> z{mag * std::cos(rng.uniform(0.0, 6.28)),
                                     mag * std::sin(rng.uniform(0.0, 6.28))};
        if (!verify_linear_bound(z, static_cast<int>(rng.below(11))).pass)
            ++violations;
        ++linear_count;
    }

    for (int t = 0; t < 50; ++t) {
        std::vector<std::complex<double>> roots;
        const int deg = 1 + static_cast<int>(rng.below(5));
        for (int i = 0; i < deg; ++i) {
            if (rng.below(2))
                roots.emplace_back(rng.uniform(0.05, 0.95), 0.0);
            else
                roots.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0));
            if (std::abs(roots.back()) < 1e-3) roots.back() += 0.2;
        }
        if (!verify_poly_bound(roots, static_cast<int>(rng.below(4))).pass)
            ++violations;
    }

    for (int t = 0; t < 50; ++t) {
        std::vector<Matrix> coeffs;
        for (int k = 0; k < 3; ++k) coeffs.push_back(random_matrix(rng, 3, 3));
        if (!verify_operator_bound(coeffs, static_cast<int>(rng.below(4))).pass)
            ++violations;
    }

    for (int t = 0; t < 100; ++t) {
        Matrix l = random_matrix(rng, 4, 4), m = random_matrix(rng, 4, 4),
               a = random_matrix(rng, 4, 4), r = random_matrix(rng, 4, 4);
        if (t % 5 == 0) a.col(t % 4).setZero();
        if (t % 11 == 0) l.row(t % 4).setZero();
        const int j = 1 + t % 3;
        if (!verify_magic_bound(l, m, a, r, j, t % 3).pass) ++violations;
    }

    c.check(violations == 0,
            std::to_string(violations) + " bound violations beyond quadrature error");
    c.finish(120.0);
}

void criterion3_costs() {
    Criterion c("C3 bad-block and glue costs (20 chains, 20 triples)");
    Rng rng(888);
    int fails = 0;
    for (int t = 0; t < 20; ++t) {
        const int d = 2 + t % 2;
        const int n = 1 + t % 4;
        const int j = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
        const double eps = (t % 2) ? 0.5 : 0.1;
        std::vector<Matrix> chain;
        for (int i = 0; i < n; ++i) {
            Matrix a = random_matrix(rng, d, d);
            if (t % 5 == 0 && i == 0) a.col(d - 1).setZero();
            chain.push_back(a);
        }
        const auto rep = estimate_bad_block_cost(chain, eps, j, 10000,
                                                 substream(999, t));
        if (!rep.pass) ++fails;
    }
    c.check(fails == 0, std::to_string(fails) + " bad-block batteries failed");

    int glue_fails = 0;
    double k_max = 0.0;
    const std::vector<double> eps_list{0.5, 0.1, 0.02, 0.005};
    for (int t = 0; t < 20; ++t) {
        Matrix l = random_matrix(rng, 3, 3), a = random_matrix(rng, 3, 3),
               r = random_matrix(rng, 3, 3);
        if (t % 2) l.col(2).setZero();
        if (t % 3 == 0) r.row(1).setZero();
        if (t % 4 == 0) a.setZero();
        const auto rep =
            estimate_glue_cost(l, a, r, 2, eps_list, 10000, substream(555, t));
        if (!rep.pass) ++glue_fails;
        k_max = std::max(k_max, rep.k_fit);
    }
    c.check(glue_fails == 0, std::to_string(glue_fails) + " glue batteries failed");
    c.check(k_max <= 4.0, "fitted K exceeded the regression guard: " +
                              std::to_string(k_max));
    c.finish(300.0);
}

void criterion4_geometry_oracles() {
    Criterion c("C4 geometry oracles (perp grid, Hausdorff, chart-perp)");
    Rng rng(4444);
    double worst_perp = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int d = 3 + static_cast<int>(rng.below(3));
        const int ku = 1 + static_cast<int>(rng.below(2));
        const int kw = 1 + static_cast<int>(rng.below(2));
        const auto u = random_subspace(rng, d, ku);
        const auto w = random_subspace(rng, d, kw);
        worst_perp = std::max(
            worst_perp, std::abs(perp(u, w) - test::perp_grid_oracle(u, w)));
    }
    c.check(worst_perp < 1e-3,
            "perp closed form vs grid oracle: worst " + std::to_string(worst_perp));

    double worst_angle = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int d = 3 + static_cast<int>(rng.below(2));
        const int k = 1 + static_cast<int>(rng.below(2));
        const auto u = random_subspace(rng, d, k);
        const auto v = random_subspace(rng, d, k);
        worst_angle = std::max(
            worst_angle, std::abs(angle(u, v) - test::hausdorff_angle_oracle(u, v)));
    }
    c.check(worst_angle < 1e-3,
            "projection-norm angle vs Hausdorff oracle: worst " +
                std::to_string(worst_angle));

    double worst_chart = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int d = 4 + static_cast<int>(rng.below(2));
        const int j = 1 + static_cast<int>(rng.below(2));
        const Matrix q = random_subspace(rng, d, d).basis();
        const Chart chart(Subspace(q.leftCols(j)), Subspace(q.rightCols(d - j)));
        const Matrix b = random_matrix(rng, d - j, j, 3.0);
        const double formula = perp_from_chart(ChartMatrix{b}, chart);
        const double direct = perp(from_chart(ChartMatrix{b}, chart), chart.e);
        worst_chart = std::max(worst_chart, std::abs(formula - direct));
    }
    c.check(worst_chart < 1e-8,
            "chart perp formula vs direct perp: worst " + std::to_string(worst_chart));
    c.finish(60.0);
}

void criterion5_flt_and_schur() {
    Criterion c("C5 FLT/geometry commutation and Schur recursion");
    Rng rng(5555);
    const int d = 5, j = 2;
    const Chart coords(Subspace::coordinate_axes(d, {0, 1}),
                       Subspace::coordinate_axes(d, {2, 3, 4}));
    double worst = 0.0;
    int done = 0;
    while (done < 1000) {
        const Matrix m = random_matrix(rng, d, d);
        const Matrix b0 = random_matrix(rng, d - j, j);
        Matrix bn;
        try {
            bn = flt_apply(BlockTransfer::from_matrix(m, j), b0);
        } catch (const ChartEscape&) {
            continue;
        }
        const Subspace v0 = from_chart(ChartMatrix{b0}, coords);
        const Subspace direct = Subspace::span_of(m * v0.basis());
        worst = std::max(worst, angle(direct, from_chart(ChartMatrix{bn}, coords)));
        ++done;
    }
    c.check(worst < 1e-8, "flt vs direct image: worst angle " + std::to_string(worst));

    double worst_schur = 0.0;
    for (int t = 0; t < 200; ++t) {
        std::vector<BlockTransfer> q;
        for (int i = 0; i < 4; ++i) {
            const Matrix p = random_subspace(rng, 4, 4).basis();
            Vector s(4);
            s << rng.uniform(2.0, 4.0), rng.uniform(2.0, 4.0),
                rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4);
            std::sort(s.data(), s.data() + 4, std::greater<double>());
            q.push_back(BlockTransfer::from_matrix(p * s.asDiagonal(), 2));
        }
        BlockTransfer acc = q[0];
        for (int n = 0; n + 1 < 4; ++n) {
            const Matrix e_n = schur_complement(acc);
            const BlockTransfer next = flt_compose(q[n + 1], acc);
            const Matrix e_n1 = schur_complement(next);
            const Matrix factor =
                q[n + 1].z - next.y * next.w.partialPivLu().solve(q[n + 1].x);
            worst_schur = std::max(
                worst_schur,
                (e_n1 - factor * e_n).norm() / (1.0 + e_n1.norm()));
            acc = next;
        }
    }
    c.check(worst_schur < 1e-8,
            "Schur recursion worst residual " + std::to_string(worst_schur));
    c.finish(60.0);
}

void criterion6_solvable_spectra() {
    Criterion c("C6 exact spectra: diagonal, Jordan, commuting LLN");
    const auto diag = zoo::constant_diagonal({2.0, 0.5});
    const auto rep = estimate_spectrum(diag, {0}, 100, 0.0);
    c.check(std::abs(rep.exponents[0] - std::log(2.0)) < 1e-10 &&
                std::abs(rep.exponents[1] + std::log(2.0)) < 1e-10,
            "diagonal exponents off");

    Matrix jj(2, 2);
    jj << 1, 1, 0, 1;
    const auto jrep = estimate_spectrum(zoo::constant(jj), {0}, 400, 0.0);
    c.check(std::abs(jrep.exponents[0]) < 1e-10 &&
                std::abs(jrep.exponents[1]) < 1e-10,
            "Jordan exponents not exactly zero");

    const auto lln = zoo::bernoulli_diag_pair(4242);
    const std::int64_t n = 10000;
    const auto lrep = estimate_spectrum(lln, {0}, n, 0.0);
    const double target = 0.5 * std::log(2.0);
    const double se = std::log(2.0) / (2.0 * std::sqrt(static_cast<double>(n)));
    c.check(std::abs(lrep.exponents[0] - target) < 3.0 * 2.0 * se &&
                std::abs(lrep.exponents[1] - target) < 3.0 * 2.0 * se,
            "commuting-diagonal exponents outside 3 standard errors");
    c.finish();
}

void criterion7_exponent_convergence() {
    Criterion c("C7 exponent convergence under shrinking noise (showcase)");
    const auto sys = zoo::semi_invertible_showcase(17);
    ExperimentConfig cfg = showcase_config();
    cfg.n_time = 2000;
    const ExponentReport rep = run_exponent_convergence(sys, cfg);

    const int d = 3;
    const std::size_t ne = cfg.epsilon_list.size();
    for (int i = 0; i < 2; ++i) {
        for (std::size_t e = 0; e + 1 < ne; ++e) {
            const double diff_a = rep.abs_diff[e * d + i];
            const double diff_b = rep.abs_diff[(e + 1) * d + i];
            const double se_a = rep.table.rows[e * d + i].stderr_;
            const double se_b = rep.table.rows[(e + 1) * d + i].stderr_;
            const double slack = 2.0 * std::sqrt(se_a * se_a + se_b * se_b);
            c.check(diff_b <= diff_a + slack,
                    "index " + std::to_string(i + 1) + ": |error| increased from eps=" +
                        std::to_string(cfg.epsilon_list[e]) + " to " +
                        std::to_string(cfg.epsilon_list[e + 1]) + " beyond 2 se");
        }
        const double final_diff = rep.abs_diff[(ne - 1) * d + i];
        c.check(final_diff < 0.05,
                "index " + std::to_string(i + 1) + ": |mu^eps - mu| = " +
                    std::to_string(final_diff) + " at eps = 1e-3");
    }
    bool found = false;
    for (std::size_t k = 0; k < rep.restored_indices.size(); ++k) {
        if (rep.restored_indices[k] == 3) {
            found = true;
            c.check(rep.restored_slopes[k] >= 0.7 && rep.restored_slopes[k] <= 1.3,
                    "mu_3^eps vs log eps slope " +
                        std::to_string(rep.restored_slopes[k]) +
                        " outside [0.7, 1.3]");
        }
    }
    c.check(found, "index 3 was not restored to finite exponents");
    c.finish(600.0);
}

void criterion8_space_convergence() {
    Criterion c("C8 space convergence in probability (showcase)");
    const auto sys = zoo::semi_invertible_showcase(17);
    ExperimentConfig cfg = showcase_config();
    cfg.n_time = 400;
    cfg.thresholds.chi = 0.1;
    const SpaceReport rep = run_space_convergence(sys, cfg);

    auto trend = [&](const std::vector<double>& p, const std::vector<double>& se,
                     const char* label) {
        for (std::size_t e = 0; e + 1 < p.size(); ++e) {
            const double slack =
                2.0 * std::sqrt(se[e] * se[e] + se[e + 1] * se[e + 1]);
            c.check(p[e + 1] <= p[e] + slack,
                    std::string(label) + ": exceedance increased at eps=" +
                        std::to_string(rep.eps[e + 1]) + " beyond 2 se");
        }
        c.check(p.back() <= 0.5 * p.front() + 1e-12,
                std::string(label) + ": P(angle > chi) at 1e-3 is " +
                    std::to_string(p.back()) + " vs " + std::to_string(p.front()) +
                    " at 1e-1 (needs at most half)");
    };
    trend(rep.p_exceed_fast, rep.se_fast, "fast space F_1");
    trend(rep.p_exceed_comp, rep.se_comp, "component Y_2");
    c.finish(600.0);
}

void criterion9_grassmann_conditional() {
    Criterion c("C9 conditional Grassmannian experiment");
    const auto sys = zoo::semi_invertible_showcase(17);
    ExperimentConfig cfg = showcase_config();
    cfg.epsilon_list = {1e-1, 1e-2};
    cfg.j_index = 2;
    cfg.block_length = 12;
    cfg.n_blocks = 4;
    cfg.n_time = 400;
    const GrassmannReport rep = run_grassmann_conditional(sys, cfg);

    for (std::size_t e = 0; e < rep.eps.size(); ++e) {
        c.check(rep.max_chart_direct_angle[e] < 1e-6,
                "chart vs direct propagation worst angle " +
                    std::to_string(rep.max_chart_direct_angle[e]) + " at eps=" +
                    std::to_string(rep.eps[e]));
        if (rep.eps[e] <= 1e-2 + 1e-12)
            c.check(rep.escape_rate[e] < 0.05,
                    "chart escape rate " + std::to_string(rep.escape_rate[e]) +
                        " at eps=" + std::to_string(rep.eps[e]));
    }
    c.check(rep.median_bn_dev.back() <= rep.median_bn_dev.front() + 1e-12,
            "median ||B_n - B_n^det|| did not shrink with eps: " +
                std::to_string(rep.median_bn_dev.front()) + " -> " +
                std::to_string(rep.median_bn_dev.back()));
    c.finish();
}

void criterion10_duality_equivariance() {
    Criterion c("C10 duality and equivariance at n = 400");
    const auto sys = zoo::semi_invertible_showcase(17);
    const auto dual = sys.dual();
    const std::int64_t n = 400;
    for (int j : {1, 2}) {
        const Subspace fast = fast_space(sys, {0}, j, n);
        const Subspace dual_slow = slow_space(dual, {0}, j, n);
        const double a = angle(fast, dual_slow.orthogonal_complement());
        c.check(a < 1e-3, "duality defect " + std::to_string(a) + " at j=" +
                              std::to_string(j));
    }

    const auto split0 = splitting(sys, {0}, n);
    const auto split1 = splitting(sys, {1}, n);
    const Matrix a0 = sys.matrix_at({0});
    for (int i = 0; i < 2; ++i) {  // finite-exponent components only
        const Subspace image = Subspace::span_of(a0 * split0.components[i].basis());
        const double defect = angle(image, split1.components[i]);
        c.check(defect < 1e-3, "equivariance defect of Y_" + std::to_string(i + 1) +
                                   " = " + std::to_string(defect));
    }
    c.finish();
}

}  // namespace

int main() {
    std::printf("stochstab acceptance suite\n");
    criterion1_constant_b();
    criterion2_bound_battery();
    criterion3_costs();
    criterion4_geometry_oracles();
    criterion5_flt_and_schur();
    criterion6_solvable_spectra();
    criterion7_exponent_convergence();
    criterion8_space_convergence();
    criterion9_grassmann_conditional();
    criterion10_duality_equivariance();
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
