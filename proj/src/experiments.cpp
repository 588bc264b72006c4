#include "stochstab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace stochstab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> ranks_of(const std::vector<double>& v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        r[order[i]] = static_cast<double>(i);
    return r;
}

// Spearman rank correlation; ties are not expected in the epsilon grids.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 3) return 0.0;
    const auto rx = ranks_of(x), ry = ranks_of(y);
    const double mx = mean_of(rx), my = mean_of(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}
}  // namespace

void ExperimentConfig::validate() const {
    if (epsilon_list.empty())
        throw ConfigError("run.epsilon_list", "must be nonempty");
    for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
        if (epsilon_list[i] <= 0.0 || epsilon_list[i] >= 1.0)
            throw ConfigError("run.epsilon_list", "entries must lie in (0,1)");
        if (i > 0 && epsilon_list[i] >= epsilon_list[i - 1])
            throw ConfigError("run.epsilon_list", "must be strictly decreasing");
    }
    if (n_trials < 30) throw ConfigError("run.n_trials", "must be >= 30");
    if (thresholds.chi <= 0.0 || thresholds.chi >= 1.0)
        throw ConfigError("thresholds.chi", "must lie in (0,1)");
    if (j_index < 1) throw ConfigError("experiment.j_index", "must be >= 1");
    if (n_time < 8) throw ConfigError("experiment.n_time", "too small");
    if (block_length < 1) throw ConfigError("experiment.block_length", "must be >= 1");
    if (n_blocks < 1) throw ConfigError("experiment.n_blocks", "must be >= 1");
    if (reference_factor < 2)
        throw ConfigError("experiment.reference_factor", "must be >= 2");
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    int w = workers > 0 ? workers
                        : static_cast<int>(std::thread::hardware_concurrency());
    w = std::max(1, std::min(w, n));
    if (w == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

double resolve_tau(const Thresholds& th, const SpectrumReport& reference) {
    if (th.tau > 0.0) return th.tau;
    const double gap = reference.min_finite_gap();
    return std::isfinite(gap) ? gap / 12.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Part (I)

ExponentRow exponent_row(const CocycleSystem& sys, const ExperimentConfig& cfg,
                         double epsilon, std::uint64_t eps_slot) {
    const int d = sys.dim();
    std::vector<std::vector<double>> per_trial(cfg.n_trials);
    std::vector<std::vector<double>> per_trial_se(cfg.n_trials);
    parallel_for(cfg.n_trials, cfg.workers, [&](int t) {
        const std::uint64_t s =
            substream(cfg.seed, eps_slot * 1000003ULL + static_cast<std::uint64_t>(t));
        const NoiseRealization noise =
            epsilon > 0.0 ? NoiseRealization::sample(d, epsilon, 0, cfg.n_time, s)
                          : NoiseRealization::zero(d, 0.0, 0, cfg.n_time);
        const SpectrumReport rep =
            spectrum_of_sequence(perturbed_view(sys, noise), 0, cfg.n_time);
        per_trial[t] = rep.exponents;
        per_trial_se[t] = rep.stderrs;
    });

    ExponentRow row;
    row.estimates.resize(d);
    row.stderrs.resize(d);
    row.neg_inf.resize(d);
    for (int i = 0; i < d; ++i) {
        std::vector<double> vals, ses;
        int inf_count = 0;
        for (int t = 0; t < cfg.n_trials; ++t) {
            if (std::isinf(per_trial[t][i])) {
                ++inf_count;
            } else {
                vals.push_back(per_trial[t][i]);
                ses.push_back(per_trial_se[t][i]);
            }
        }
        if (vals.empty()) {
            row.estimates[i] = -kInf;
            row.stderrs[i] = 0.0;
            row.neg_inf[i] = true;
            continue;
        }
        const double m = mean_of(vals);
        const double between = sd_of(vals, m) / std::sqrt(static_cast<double>(vals.size()));
        const double within = mean_of(ses);
        row.estimates[i] = m;
        // The within-trial term does not shrink with the trial count: at
        // eps = 0 every trial is the same path and only time-averaging error
        // remains.
        row.stderrs[i] = std::sqrt(between * between + within * within);
        row.neg_inf[i] = inf_count > cfg.n_trials / 2;
    }
    return row;
}

ExponentReport run_exponent_convergence(const CocycleSystem& sys,
                                        const ExperimentConfig& cfg) {
    cfg.validate();
    ExponentReport rep;
    rep.reference = estimate_spectrum(
        sys, {0}, cfg.reference_factor * cfg.n_time, 0.0);
    if (rep.reference.resolution_warning)
        throw ConfigError("reference",
                          "reference spectrum gaps unresolvable at this horizon");
    const int d = sys.dim();

    std::vector<ExponentRow> rows(cfg.epsilon_list.size());
    for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e)
        rows[e] = exponent_row(sys, cfg, cfg.epsilon_list[e], e);

    for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
        for (int i = 0; i < d; ++i) {
            TableRow r;
            r.epsilon = cfg.epsilon_list[e];
            r.index = i + 1;
            r.estimate = rows[e].estimates[i];
            r.stderr_ = rows[e].stderrs[i];
            r.n_trials = cfg.n_trials;
            if (rows[e].neg_inf[i]) r.flag = "neg_inf";
            rep.table.rows.push_back(r);
            const double ref = rep.reference.exponents[i];
            double diff;
            if (std::isinf(ref) && rows[e].neg_inf[i])
                diff = 0.0;
            else if (std::isinf(ref) || rows[e].neg_inf[i])
                diff = kInf;
            else
                diff = std::abs(r.estimate - ref);
            rep.abs_diff.push_back(diff);
        }
    }

    // Trend statistic per index: positive when the error shrinks with eps.
    rep.spearman.resize(d, 0.0);
    for (int i = 0; i < d; ++i) {
        std::vector<double> xs, ys;
        for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
            const double diff = rep.abs_diff[e * d + i];
            if (std::isfinite(diff)) {
                xs.push_back(cfg.epsilon_list[e]);
                ys.push_back(diff);
            }
        }
        rep.spearman[i] = spearman(xs, ys);
    }

    // Rank-restoration slopes for reference -inf indices.
    for (int i = 0; i < d; ++i) {
        if (!std::isinf(rep.reference.exponents[i])) continue;
        std::vector<double> xs, ys;
        for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
            if (rows[e].neg_inf[i]) continue;
            xs.push_back(std::log(cfg.epsilon_list[e]));
            ys.push_back(rows[e].estimates[i]);
        }
        if (xs.size() < 2) continue;
        const double mx = mean_of(xs), my = mean_of(ys);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            num += (xs[k] - mx) * (ys[k] - my);
            den += (xs[k] - mx) * (xs[k] - mx);
        }
        rep.restored_indices.push_back(i + 1);
        rep.restored_slopes.push_back(num / den);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Part (II)

namespace {
// Perturbed group boundaries: each perturbed exponent is assigned to the
// reference group whose window (lambda_i - tau, lambda_i + tau) contains it;
// exponents below every window (including -inf) fall into the final group.
struct WindowSplit {
    std::vector<int> boundaries;
    bool edge_flag = false;  // some exponent within tau/4 of a window edge
};

WindowSplit window_boundaries(const SpectrumReport& perturbed,
                              const SpectrumReport& reference, double tau) {
    WindowSplit out;
    const auto& groups = reference.grouped;
    std::vector<int> counts(groups.size(), 0);
    for (double mu : perturbed.exponents) {
        std::size_t assigned = groups.size() - 1;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double lam = groups[g].exponent;
            if (std::isinf(lam)) {
                assigned = g;  // -inf window catches everything that falls through
                break;
            }
            if (std::isinf(mu)) continue;
            if (mu > lam - tau && mu < lam + tau) {
                assigned = g;
                if (std::min(mu - (lam - tau), (lam + tau) - mu) < 0.25 * tau)
                    out.edge_flag = true;
                break;
            }
            if (mu >= lam + tau) {
                assigned = g;  // above the window: still nearest-from-above
                out.edge_flag = true;
                break;
            }
        }
        ++counts[assigned];
    }
    int acc = 0;
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        acc += counts[g];
        out.boundaries.push_back(acc);
    }
    return out;
}
}  // namespace

SpaceReport run_space_convergence(const CocycleSystem& sys,
                                  const ExperimentConfig& cfg) {
    cfg.validate();
    SpaceReport rep;
    const int d = sys.dim();
    const std::int64_t n_ref = cfg.reference_factor * cfg.n_time;

    const SplittingReport ref_split = splitting(sys, {0}, n_ref);
    rep.reference = ref_split.spectrum;
    if (cfg.j_index > static_cast<int>(ref_split.boundaries.size()))
        throw ConfigError("experiment.j_index",
                          "cocycle has only " +
                              std::to_string(ref_split.boundaries.size()) +
                              " group boundaries");
    const int j = ref_split.boundaries[cfg.j_index - 1];
    rep.boundary = j;
    rep.chi = cfg.thresholds.chi;
    rep.tau = resolve_tau(cfg.thresholds, rep.reference);
    const Subspace& f_ref = ref_split.fast[cfg.j_index - 1];
    const Subspace& y_ref = ref_split.components[cfg.j_index];

    for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
        const double eps = cfg.epsilon_list[e];
        std::vector<double> ang_f(cfg.n_trials, -1.0), ang_y(cfg.n_trials, -1.0);
        std::vector<int> edge(cfg.n_trials, 0), failed(cfg.n_trials, 0);
        parallel_for(cfg.n_trials, cfg.workers, [&](int t) {
            const std::uint64_t s = substream(
                cfg.seed, (e + 1) * 7000003ULL + static_cast<std::uint64_t>(t));
            const NoiseRealization noise = NoiseRealization::sample(
                d, eps, -cfg.n_time, cfg.n_time, s);
            const SequenceView pv = perturbed_view(sys, noise);
            try {
                const Subspace f_hat = fast_space(pv, 0, j, cfg.n_time);
                ang_f[t] = angle(f_hat, f_ref);

                const SpectrumReport pspec =
                    spectrum_of_sequence(pv, 0, cfg.n_time);
                const WindowSplit ws =
                    window_boundaries(pspec, rep.reference, rep.tau);
                edge[t] = ws.edge_flag ? 1 : 0;
                const auto& bs = ws.boundaries;
                if (static_cast<int>(bs.size()) < cfg.j_index) {
                    failed[t] = 1;
                    return;
                }
                // Component Y_{i+1} = Pr_{F_{D_{i+1}} || E_{D_{i+1}}}(E_{D_i});
                // when D_i is the last boundary the projector target is the
                // whole space and the component is E_{D_i} itself.
                const int jb = bs[cfg.j_index - 1];
                const Subspace e_prev = slow_space(pv, 0, jb, cfg.n_time);
                Subspace y_hat = e_prev;
                if (cfg.j_index < static_cast<int>(bs.size())) {
                    const int jn = bs[cfg.j_index];
                    const Subspace f_next = fast_space(pv, 0, jn, cfg.n_time);
                    const Subspace e_next = slow_space(pv, 0, jn, cfg.n_time);
                    const Matrix pr = oblique_projector(f_next, e_next);
                    y_hat = projected_component(
                        pr, e_prev,
                        rep.reference.grouped[cfg.j_index].multiplicity);
                }
                ang_y[t] = angle(y_hat, y_ref);
            } catch (const std::exception&) {
                failed[t] = 1;
            }
        });

        std::vector<double> af, ay;
        int edge_count = 0, fail_count = 0;
        for (int t = 0; t < cfg.n_trials; ++t) {
            if (failed[t]) {
                ++fail_count;
                continue;
            }
            af.push_back(ang_f[t]);
            if (ang_y[t] >= 0.0) ay.push_back(ang_y[t]);
            edge_count += edge[t];
        }
        auto exceed = [&](const std::vector<double>& v) {
            if (v.empty()) return 0.0;
            int c = 0;
            for (double a : v)
                if (a > cfg.thresholds.chi) ++c;
            return static_cast<double>(c) / static_cast<double>(v.size());
        };
        const double pf = exceed(af), py = exceed(ay);
        const double nf = static_cast<double>(std::max<std::size_t>(af.size(), 1));
        const double ny = static_cast<double>(std::max<std::size_t>(ay.size(), 1));
        rep.eps.push_back(eps);
        rep.p_exceed_fast.push_back(pf);
        rep.se_fast.push_back(std::sqrt(pf * (1.0 - pf) / nf));
        rep.mean_angle_fast.push_back(af.empty() ? 0.0 : mean_of(af));
        rep.p_exceed_comp.push_back(py);
        rep.se_comp.push_back(std::sqrt(py * (1.0 - py) / ny));
        rep.mean_angle_comp.push_back(ay.empty() ? 0.0 : mean_of(ay));
        rep.window_edge_flags.push_back(edge_count);
        rep.failed_trials.push_back(fail_count);

        const int nt = static_cast<int>(af.size());
        rep.table.rows.push_back({eps, j, pf, rep.se_fast.back(), nt, "p_exceed_f"});
        rep.table.rows.push_back(
            {eps, j, rep.mean_angle_fast.back(),
             af.empty() ? 0.0 : sd_of(af, mean_of(af)) / std::sqrt(nf), nt,
             "mean_angle_f"});
        rep.table.rows.push_back({eps, cfg.j_index + 1, py, rep.se_comp.back(),
                                  static_cast<int>(ay.size()), "p_exceed_y"});
        rep.table.rows.push_back(
            {eps, cfg.j_index + 1, rep.mean_angle_comp.back(),
             ay.empty() ? 0.0 : sd_of(ay, mean_of(ay)) / std::sqrt(ny),
             static_cast<int>(ay.size()), "mean_angle_y"});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Conditional Grassmannian experiment

GrassmannReport run_grassmann_conditional(const CocycleSystem& sys,
                                          const ExperimentConfig& cfg) {
    cfg.validate();
    GrassmannReport rep;
    const int d = sys.dim();

    const SpectrumReport ref_spec =
        estimate_spectrum(sys, {0}, cfg.reference_factor * cfg.n_time, 0.0);
    const auto bounds = ref_spec.boundaries();
    if (cfg.j_index > static_cast<int>(bounds.size()))
        throw ConfigError("experiment.j_index", "no such group boundary");
    const int j = bounds[cfg.j_index - 1];
    const double delta = cfg.thresholds.delta;

    for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
        const double eps = cfg.epsilon_list[e];
        const std::int64_t N = cfg.c_log_eps_policy
                                   ? block_length_for_epsilon(sys, eps)
                                   : cfg.block_length;
        const std::int64_t total = static_cast<std::int64_t>(cfg.n_blocks) * N;
        const std::int64_t lo = -1 - cfg.reference_factor * N;
        const std::int64_t hi = total + N;

        // Frozen noise everywhere; only Delta_{-1} is resampled below.
        const NoiseRealization base = NoiseRealization::sample(
            d, eps, lo, hi, substream(cfg.seed, 0xabc000ULL + e));
        const SequenceView pv = perturbed_view(sys, base);

        const Subspace v_prev =
            fast_space(pv, -1, j, cfg.reference_factor * N);
        const TransferChain chain = build_transfer_chain(pv, 0, j, N, cfg.n_blocks);
        const Chart& chart0 = chain.charts.front();
        const Chart& chart_n = chain.charts.back();
        const Matrix a_minus1 = sys.matrix_at({-1});
        // One matrix per chain block; the direct evolution re-orthonormalizes
        // between blocks so long products do not crush the trailing
        // directions out of double precision.
        std::vector<Matrix> evolve_blocks;
        for (int b = 0; b < cfg.n_blocks; ++b)
            evolve_blocks.push_back(scaled_block(pv, b * N, N).b);
        const Subspace f_ref = fast_space(
            view(sys), total, j,
            cfg.reference_factor * std::max<std::int64_t>(total, cfg.n_time));

        // Deterministic baseline: the chain value with Delta_{-1} = 0.
        Matrix bn_det;
        bool have_det = false;
        try {
            ChartMatrix b0_det = b0_from_perturbation(a_minus1, Matrix::Zero(d, d),
                                                      eps, v_prev, chart0);
            for (const auto& q : chain.blocks) b0_det = flt_apply(q, b0_det);
            bn_det = b0_det.b;
            have_det = true;
        } catch (const std::exception&) {
        }

        std::vector<double> bn(cfg.n_trials, -1.0), bn_dev(cfg.n_trials, -1.0),
            a_direct(cfg.n_trials, -1.0), a_ref(cfg.n_trials, -1.0);
        std::vector<int> escapes(cfg.n_trials, 0);
        parallel_for(cfg.n_trials, cfg.workers, [&](int t) {
            Rng rng(substream(cfg.seed, 0xdef000ULL + e * 131071ULL +
                                            static_cast<std::uint64_t>(t)));
            const Matrix delta_m1 =
                eps > 0.0 ? sample_operator_ball(rng, d) : Matrix::Zero(d, d);
            try {
                ChartMatrix b =
                    b0_from_perturbation(a_minus1, delta_m1, eps, v_prev, chart0);
                for (const auto& q : chain.blocks) b = flt_apply(q, b);
                bn[t] = operator_norm(b.b);
                if (have_det) bn_dev[t] = operator_norm(b.b - bn_det);
                const Subspace through_chart = from_chart(b, chart_n);
                Matrix frame = (a_minus1 + eps * delta_m1) * v_prev.basis();
                for (const Matrix& blk : evolve_blocks)
                    frame = Subspace::span_of(blk * frame).basis();
                a_direct[t] = angle(through_chart, Subspace(frame));
                a_ref[t] = angle(through_chart, f_ref);
            } catch (const std::exception&) {
                escapes[t] = 1;
            }
        });

        std::vector<double> bns, devs, directs, refs;
        int esc = 0;
        for (int t = 0; t < cfg.n_trials; ++t) {
            if (escapes[t]) {
                ++esc;
                continue;
            }
            bns.push_back(bn[t]);
            if (bn_dev[t] >= 0.0) devs.push_back(bn_dev[t]);
            directs.push_back(a_direct[t]);
            refs.push_back(a_ref[t]);
        }
        const double med = median_of(bns);
        int big = 0;
        for (double v : bns)
            if (v > 3.0 / delta) ++big;
        rep.eps.push_back(eps);
        rep.block_length.push_back(N);
        rep.median_bn.push_back(med);
        rep.median_bn_dev.push_back(median_of(devs));
        rep.frac_bn_large.push_back(
            bns.empty() ? 0.0 : static_cast<double>(big) / bns.size());
        rep.escape_rate.push_back(static_cast<double>(esc) / cfg.n_trials);
        rep.max_chart_direct_angle.push_back(
            directs.empty() ? 0.0 : *std::max_element(directs.begin(), directs.end()));
        rep.mean_angle_to_ref.push_back(refs.empty() ? 0.0 : mean_of(refs));

        const int nt = static_cast<int>(bns.size());
        rep.table.rows.push_back({eps, j, med, 0.0, nt, "median_bn"});
        rep.table.rows.push_back({eps, j, rep.median_bn_dev.back(), 0.0, nt, "median_bn_dev"});
        rep.table.rows.push_back({eps, j, rep.frac_bn_large.back(), 0.0, nt, "frac_bn_large"});
        rep.table.rows.push_back({eps, j, rep.escape_rate.back(), 0.0, cfg.n_trials, "escape_rate"});
        rep.table.rows.push_back(
            {eps, j, rep.mean_angle_to_ref.back(),
             refs.empty() ? 0.0 : sd_of(refs, mean_of(refs)) / std::sqrt(double(nt)),
             nt, "mean_angle_ref"});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Good-block census

CensusReport run_good_block_census(const CocycleSystem& sys,
                                   const ExperimentConfig& cfg) {
    cfg.validate();
    CensusReport rep;
    rep.n_trials = cfg.n_trials;

    const SpectrumReport ref_spec =
        estimate_spectrum(sys, {0}, cfg.reference_factor * cfg.n_time, 0.0);
    const auto bounds = ref_spec.boundaries();
    if (cfg.j_index > static_cast<int>(bounds.size()))
        throw ConfigError("experiment.j_index", "no such group boundary");
    const int j = bounds[cfg.j_index - 1];
    rep.boundary = j;

    for (std::size_t li = 0; li < cfg.census_lengths.size(); ++li) {
        const std::int64_t N = cfg.census_lengths[li];
        std::vector<int> good(cfg.n_trials, 0);
        parallel_for(cfg.n_trials, cfg.workers, [&](int t) {
            Rng rng(substream(cfg.seed, 0xce0500ULL + li * 65537ULL +
                                            static_cast<std::uint64_t>(t)));
            const auto w0 = static_cast<std::int64_t>(rng.below(1u << 20));
            const GoodBlockDiagnostics diag = classify_good_block(
                sys, {w0}, j, N, cfg.thresholds.kappa, cfg.thresholds.delta,
                cfg.thresholds.K_threshold, cfg.reference_factor);
            good[t] = diag.good ? 1 : 0;
        });
        const double freq =
            std::accumulate(good.begin(), good.end(), 0) /
            static_cast<double>(cfg.n_trials);
        rep.lengths.push_back(N);
        rep.frequency.push_back(freq);
        rep.table.rows.push_back({0.0, static_cast<int>(N), freq,
                                  std::sqrt(freq * (1.0 - freq) / cfg.n_trials),
                                  cfg.n_trials, "good_freq"});
    }
    return rep;
}

}  // namespace stochstab
