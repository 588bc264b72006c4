#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stochstab/cocycle.hpp"
#include "stochstab/grassmann.hpp"
#include "stochstab/oseledets.hpp"

namespace stochstab {

struct Thresholds {
    double chi = 0.1;          // subspace-angle closeness threshold
    double tau = 0.0;          // exponent window half-width; <=0: min gap / 12
    double kappa = 0.05;       // good-block separation
    double delta = 0.1;        // good-block alignment
    double K_threshold = 10.0; // good-block singular-value threshold
};

struct ExperimentConfig {
    std::vector<double> epsilon_list;  // strictly decreasing, in (0,1)
    int n_trials = 200;
    std::uint64_t seed = 0;
    int j_index = 1;            // which group boundary D_i to track
    std::int64_t n_time = 2000; // estimation horizon
    bool c_log_eps_policy = false;
    std::int64_t block_length = 25;  // N for the transfer chain (fixed policy)
    int n_blocks = 4;                // chain length
    int reference_factor = 8;        // reference horizon multiplier
    int workers = 0;                 // 0: hardware concurrency
    Thresholds thresholds;
    std::vector<std::int64_t> census_lengths = {1, 2, 4, 8, 16, 32};

    void validate() const;  // throws ConfigError
};

/// One output row; serialized to CSV as
/// epsilon,index,estimate,stderr,n_trials,flag.
struct TableRow {
    double epsilon = 0.0;
    int index = 0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    int n_trials = 0;
    std::string flag;
};

struct ConvergenceTable {
    std::vector<TableRow> rows;
};

/// Run trials [0, n) on a small pool; fn(i) must write only to slot i of any
/// shared output, so aggregation is order-independent.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// tau = (1/12) min finite gap of the estimated spectrum unless overridden.
double resolve_tau(const Thresholds& th, const SpectrumReport& reference);

// ---------------------------------------------------------------------------
// Convergence of exponents under shrinking noise.

struct ExponentReport {
    ConvergenceTable table;   // one row per (epsilon, index)
    SpectrumReport reference;
    std::vector<double> abs_diff;        // |mu_i^eps - mu_i| per row
    std::vector<double> spearman;        // per index: corr(eps, |diff|)
    std::vector<int> restored_indices;   // -inf indices with finite estimates
    std::vector<double> restored_slopes; // d mu^eps / d log eps per such index
};

ExponentReport run_exponent_convergence(const CocycleSystem& sys,
                                        const ExperimentConfig& cfg);

/// Single-epsilon row computation (also valid at eps = 0, used as the
/// baseline sanity case).
struct ExponentRow {
    std::vector<double> estimates;  // per index
    std::vector<double> stderrs;
    std::vector<bool> neg_inf;
};
ExponentRow exponent_row(const CocycleSystem& sys, const ExperimentConfig& cfg,
                         double epsilon, std::uint64_t eps_slot);

// ---------------------------------------------------------------------------
// Convergence in probability of Oseledets spaces.

struct SpaceReport {
    ConvergenceTable table;
    SpectrumReport reference;
    int boundary = 0;   // j = D_{j_index}
    double chi = 0.0;
    double tau = 0.0;
    std::vector<double> eps;
    std::vector<double> p_exceed_fast, se_fast, mean_angle_fast;
    std::vector<double> p_exceed_comp, se_comp, mean_angle_comp;
    std::vector<int> window_edge_flags;  // trials with exponents near window edges
    std::vector<int> failed_trials;      // per epsilon, excluded trials
};

SpaceReport run_space_convergence(const CocycleSystem& sys,
                                  const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Conditional Grassmannian experiment: resample only Delta_{-1}.

struct GrassmannReport {
    std::vector<double> eps;
    std::vector<std::int64_t> block_length;    // N per epsilon
    std::vector<double> median_bn;
    /// Median distance of B_n from the Delta_{-1} = 0 chain value: the
    /// eps-variability of the conditional distribution.  The raw median
    /// tends to the fixed chart offset of the fast space and need not
    /// shrink with eps.
    std::vector<double> median_bn_dev;
    std::vector<double> frac_bn_large;         // ||B_n|| > 3 / delta
    std::vector<double> escape_rate;
    std::vector<double> max_chart_direct_angle;
    std::vector<double> mean_angle_to_ref;
    ConvergenceTable table;
};

GrassmannReport run_grassmann_conditional(const CocycleSystem& sys,
                                          const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Good-block census.

struct CensusReport {
    std::vector<std::int64_t> lengths;
    std::vector<double> frequency;
    int boundary = 0;
    int n_trials = 0;
    ConvergenceTable table;
};

CensusReport run_good_block_census(const CocycleSystem& sys,
                                   const ExperimentConfig& cfg);

}  // namespace stochstab
