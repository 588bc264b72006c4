#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stochstab/rng.hpp"
#include "stochstab/subspace_geometry.hpp"

namespace stochstab {

/// A point of the driving system's orbit.  All built-in drivers are realized
/// as deterministic functions of an integer orbit coordinate, which makes
/// every driver invertible: sigma shifts the coordinate by +1.
struct OrbitPoint {
    std::int64_t time = 0;
};

inline OrbitPoint shifted(OrbitPoint w, std::int64_t n) { return {w.time + n}; }

/// Invertible measure-preserving driving system.  Three kinds are built in:
/// an i.i.d. symbol sequence (two-sided Bernoulli shift), an irrational
/// circle rotation, and an explicit periodic orbit.
class DrivingSystem {
public:
    enum class Kind { BernoulliShift, CircleRotation, FiniteOrbit };

    static DrivingSystem bernoulli(std::vector<double> probabilities,
                                   std::uint64_t seed);
    static DrivingSystem rotation(double alpha, double theta0 = 0.0);
    static DrivingSystem finite_orbit(std::vector<int> sequence);

    Kind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }

    /// Symbol at an orbit point (Bernoulli and finite-orbit drivers).
    int symbol_at(OrbitPoint w) const;

    /// Circle position in [0,1) at an orbit point (rotation driver).
    double position_at(OrbitPoint w) const;

    const std::vector<double>& probabilities() const { return probabilities_; }
    double alpha() const { return alpha_; }
    const std::vector<int>& sequence() const { return sequence_; }

private:
    DrivingSystem() = default;
    Kind kind_ = Kind::BernoulliShift;
    std::vector<double> probabilities_;  // Bernoulli
    std::vector<double> cumulative_;
    double alpha_ = 0.0, theta0_ = 0.0;  // rotation
    std::vector<int> sequence_;          // finite orbit
    std::uint64_t seed_ = 0;
};

/// Matrix generator: a deterministic map from driver state to a d x d
/// matrix.  Either a symbol-indexed table or an analytic trigonometric
/// family over the circle.
class Generator {
public:
    static Generator matrix_table(std::vector<Matrix> matrices);
    /// A(theta) = c0 + c1 cos(2 pi theta) + s1 sin(2 pi theta).
    static Generator fourier(Matrix c0, Matrix c1, Matrix s1);
    static Generator constant(Matrix a);

    int dim() const { return d_; }
    Matrix at(const DrivingSystem& driver, OrbitPoint w) const;

    bool is_table() const { return kind_ == Kind::Table; }
    const std::vector<Matrix>& table() const { return table_; }

private:
    enum class Kind { Table, Fourier };
    Kind kind_ = Kind::Table;
    std::vector<Matrix> table_;
    Matrix c0_, c1_, s1_;
    int d_ = 0;
};

/// A matrix cocycle: driving system plus generator.  Immutable after
/// construction; all evaluation is pure.
class CocycleSystem {
public:
    CocycleSystem(DrivingSystem driver, Generator generator);

    int dim() const { return generator_.dim(); }
    const DrivingSystem& driver() const { return driver_; }
    const Generator& generator() const { return generator_; }

    /// A(sigma^t omega_0): the matrix applied at orbit time t.
    Matrix matrix_at(OrbitPoint w) const;

    /// The dual cocycle: base sigma^{-1}, generator G(w) = A(sigma^{-1} w)^T.
    /// Realized as a new CocycleSystem over the reversed orbit coordinate.
    CocycleSystem dual() const;

    /// The cocycle with every matrix scaled by c.
    CocycleSystem scaled(double c) const;

private:
    // direction/offset implement the dual transformation without touching
    // the underlying driver: effective time = direction * t + offset.
    CocycleSystem(DrivingSystem driver, Generator generator, int direction,
                  std::int64_t offset, bool transpose);
    DrivingSystem driver_;
    Generator generator_;
    int direction_ = 1;
    std::int64_t offset_ = 0;
    bool transpose_ = false;
    double scale_ = 1.0;
};

/// A seeded finite window of perturbation matrices Delta_n, each drawn
/// uniformly from the operator-norm unit ball.  Indices are absolute orbit
/// times; windows routinely include index -1 (the coordinate the
/// conditional Grassmannian experiment resamples).
class NoiseRealization {
public:
    /// Draw a window [lo, hi) of i.i.d. uniform operator-ball matrices.
    static NoiseRealization sample(int d, double epsilon, std::int64_t lo,
                                   std::int64_t hi, std::uint64_t seed);

    /// Zero noise over [lo, hi); epsilon is retained for bookkeeping.
    static NoiseRealization zero(int d, double epsilon, std::int64_t lo,
                                 std::int64_t hi);

    double epsilon() const { return epsilon_; }
    std::int64_t lo() const { return lo_; }
    std::int64_t hi() const { return hi_; }
    std::uint64_t seed() const { return seed_; }
    double acceptance_rate() const { return acceptance_rate_; }

    const Matrix& delta(std::int64_t t) const;
    void set_delta(std::int64_t t, Matrix m);

private:
    double epsilon_ = 0.0;
    std::int64_t lo_ = 0, hi_ = 0;
    std::uint64_t seed_ = 0;
    double acceptance_rate_ = 1.0;
    std::vector<Matrix> window_;
};

/// A time-indexed matrix sequence; the common currency between the cocycle
/// layer and the estimators, so perturbed and unperturbed paths share code.
struct SequenceView {
    int d = 0;
    std::function<Matrix(std::int64_t)> at;
};

SequenceView view(const CocycleSystem& sys);
SequenceView perturbed_view(const CocycleSystem& sys, const NoiseRealization& noise);

/// Forward block A^(n)(w) = A(sigma^{n-1} w) ... A(w),  n >= 1.
Matrix cocycle_block(const CocycleSystem& sys, OrbitPoint w, std::int64_t n);

/// Perturbed block: product of (A(sigma^k w) + eps Delta_k), k = n-1 .. 0.
/// The noise window must cover every index; WindowUnderrun otherwise.
Matrix perturbed_block(const CocycleSystem& sys, const NoiseRealization& noise,
                       OrbitPoint w, std::int64_t n);

/// One uniform sample from {M : ||M||_op <= 1} by rejection from the entry
/// cube [-1,1]^{d^2}.  attempts, if given, accumulates the rejection count.
Matrix sample_operator_ball(Rng& rng, int d, std::int64_t* attempts = nullptr);

/// j x j matrix with i.i.d. entries uniform on [-1, 1].
Matrix sample_entry_cube(Rng& rng, int j);

/// Block length N = floor(C |log eps|) with C = 1 / (2 E[log+(||A||+1)]),
/// the expectation estimated by Monte Carlo along the driver's orbit.
std::int64_t block_length_for_epsilon(const CocycleSystem& sys, double epsilon,
                                      int mc_samples = 4096);

/// Built-in cocycles exercised by the tests and experiments.
namespace zoo {

/// Constant cocycle with the given matrix.
CocycleSystem constant(Matrix a);

/// Constant diagonal cocycle.
CocycleSystem constant_diagonal(const std::vector<double>& diag);

/// i.i.d. Bernoulli(1/2) over {diag(2,1), diag(1,2)}: commuting pair with
/// mu_1 = mu_2 = (log 2)/2.
CocycleSystem bernoulli_diag_pair(std::uint64_t seed = 11);

/// d = 3 semi-invertible showcase: i.i.d. choice between a full-rank matrix
/// (prob 0.1) and a rank-2 matrix (prob 0.9); lambda_3 = -infinity and the
/// perturbed third exponent scales like 0.9 log(eps).
CocycleSystem semi_invertible_showcase(std::uint64_t seed = 17);

/// Same matrices as the showcase but with the zero singular value replaced
/// by 0.35, making the cocycle invertible.
CocycleSystem invertible_showcase(std::uint64_t seed = 17);

/// Golden-ratio circle rotation with a trigonometric generator.
CocycleSystem rotation_fourier();

}  // namespace zoo

}  // namespace stochstab
