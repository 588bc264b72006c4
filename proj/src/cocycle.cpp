#include "stochstab/cocycle.hpp"

#include <cmath>
#include <numeric>

namespace stochstab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }
}  // namespace

// ---------------------------------------------------------------------------
// DrivingSystem

DrivingSystem DrivingSystem::bernoulli(std::vector<double> probabilities,
                                       std::uint64_t seed) {
    DrivingSystem s;
    s.kind_ = Kind::BernoulliShift;
    s.seed_ = seed;
    const double total =
        std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("driver.probabilities",
                          "probabilities sum to " + std::to_string(total));
    s.probabilities_ = std::move(probabilities);
    s.cumulative_.resize(s.probabilities_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < s.probabilities_.size(); ++i) {
        acc += s.probabilities_[i];
        s.cumulative_[i] = acc;
    }
    s.cumulative_.back() = 1.0;
    return s;
}

DrivingSystem DrivingSystem::rotation(double alpha, double theta0) {
    DrivingSystem s;
    s.kind_ = Kind::CircleRotation;
    s.alpha_ = alpha;
    if (theta0 < 0.0 || theta0 >= 1.0)
        throw ConfigError("driver.theta0", "initial point must lie in [0,1)");
    s.theta0_ = theta0;
    return s;
}

DrivingSystem DrivingSystem::finite_orbit(std::vector<int> sequence) {
    DrivingSystem s;
    s.kind_ = Kind::FiniteOrbit;
    if (sequence.empty())
        throw ConfigError("driver.sequence", "finite orbit must be nonempty");
    s.sequence_ = std::move(sequence);
    return s;
}

int DrivingSystem::symbol_at(OrbitPoint w) const {
    switch (kind_) {
        case Kind::BernoulliShift: {
            // Counter-based draw: the symbol at time t is a pure function of
            // (seed, t), so the two-sided orbit is well defined.
            const std::uint64_t r =
                substream(seed_, static_cast<std::uint64_t>(w.time) * 2654435761ULL +
                                     0x51ed2701ULL);
            const double u = static_cast<double>(r >> 11) * 0x1.0p-53;
            for (std::size_t i = 0; i < cumulative_.size(); ++i)
                if (u < cumulative_[i]) return static_cast<int>(i);
            return static_cast<int>(cumulative_.size()) - 1;
        }
        case Kind::FiniteOrbit: {
            const auto m = static_cast<std::int64_t>(sequence_.size());
            std::int64_t idx = w.time % m;
            if (idx < 0) idx += m;
            return sequence_[static_cast<std::size_t>(idx)];
        }
        case Kind::CircleRotation:
            throw ConfigError("driver", "rotation driver has no symbols");
    }
    return 0;
}

double DrivingSystem::position_at(OrbitPoint w) const {
    if (kind_ != Kind::CircleRotation)
        throw ConfigError("driver", "only the rotation driver has a circle position");
    const double x = theta0_ + static_cast<double>(w.time) * alpha_;
    return x - std::floor(x);
}

// ---------------------------------------------------------------------------
// Generator

Generator Generator::matrix_table(std::vector<Matrix> matrices) {
    Generator g;
    g.kind_ = Kind::Table;
    if (matrices.empty())
        throw ConfigError("generator.matrices", "table must be nonempty");
    g.d_ = static_cast<int>(matrices.front().rows());
    for (const Matrix& m : matrices)
        if (m.rows() != g.d_ || m.cols() != g.d_)
            throw ConfigError("generator.matrices", "matrices must share one square size");
    g.table_ = std::move(matrices);
    return g;
}

Generator Generator::fourier(Matrix c0, Matrix c1, Matrix s1) {
    Generator g;
    g.kind_ = Kind::Fourier;
    g.d_ = static_cast<int>(c0.rows());
    if (c0.cols() != g.d_ || c1.rows() != g.d_ || c1.cols() != g.d_ ||
        s1.rows() != g.d_ || s1.cols() != g.d_)
        throw ConfigError("generator", "fourier coefficients must be square, same size");
    g.c0_ = std::move(c0);
    g.c1_ = std::move(c1);
    g.s1_ = std::move(s1);
    return g;
}

Generator Generator::constant(Matrix a) {
    std::vector<Matrix> t;
    t.push_back(std::move(a));
    return matrix_table(std::move(t));
}

Matrix Generator::at(const DrivingSystem& driver, OrbitPoint w) const {
    if (kind_ == Kind::Table) {
        if (table_.size() == 1) return table_[0];
        const int sym = driver.symbol_at(w);
        return table_[static_cast<std::size_t>(sym) % table_.size()];
    }
    const double theta = driver.position_at(w);
    return c0_ + std::cos(kTwoPi * theta) * c1_ + std::sin(kTwoPi * theta) * s1_;
}

// ---------------------------------------------------------------------------
// CocycleSystem

CocycleSystem::CocycleSystem(DrivingSystem driver, Generator generator)
    : driver_(std::move(driver)), generator_(std::move(generator)) {}

CocycleSystem::CocycleSystem(DrivingSystem driver, Generator generator,
                             int direction, std::int64_t offset, bool transpose)
    : driver_(std::move(driver)),
      generator_(std::move(generator)),
      direction_(direction),
      offset_(offset),
      transpose_(transpose) {}

CocycleSystem CocycleSystem::dual() const {
    // G(w) = A(sigma^{-1} w)^T over base sigma^{-1}: effective time of the
    // dual at coordinate t is -(t) - 1 relative to the primal orbit.
    CocycleSystem d(driver_, generator_, -direction_, offset_ - direction_,
                    !transpose_);
    d.scale_ = scale_;
    return d;
}

CocycleSystem CocycleSystem::scaled(double c) const {
    CocycleSystem s(driver_, generator_, direction_, offset_, transpose_);
    s.scale_ = scale_ * c;
    return s;
}

SequenceView view(const CocycleSystem& sys) {
    return SequenceView{sys.dim(),
                        [sys](std::int64_t t) { return sys.matrix_at({t}); }};
}

SequenceView perturbed_view(const CocycleSystem& sys, const NoiseRealization& noise) {
    const double eps = noise.epsilon();
    return SequenceView{sys.dim(), [sys, &noise, eps](std::int64_t t) {
                            return Matrix(sys.matrix_at({t}) + eps * noise.delta(t));
                        }};
}

Matrix CocycleSystem::matrix_at(OrbitPoint w) const {
    const OrbitPoint eff{direction_ * w.time + offset_};
    Matrix a = generator_.at(driver_, eff);
    if (transpose_) a.transposeInPlace();
    if (scale_ != 1.0) a *= scale_;
    return a;
}

// ---------------------------------------------------------------------------
// NoiseRealization

NoiseRealization NoiseRealization::sample(int d, double epsilon, std::int64_t lo,
                                          std::int64_t hi, std::uint64_t seed) {
    NoiseRealization n;
    n.epsilon_ = epsilon;
    n.lo_ = lo;
    n.hi_ = hi;
    n.seed_ = seed;
    n.window_.reserve(static_cast<std::size_t>(hi - lo));
    std::int64_t attempts = 0;
    for (std::int64_t t = lo; t < hi; ++t) {
        // Per-index substream so a window is reproducible regardless of the
        // order in which other indices were generated.
        Rng rng(substream(seed, static_cast<std::uint64_t>(t - lo) + 0x7f3ULL));
        n.window_.push_back(sample_operator_ball(rng, d, &attempts));
    }
    const auto count = static_cast<std::int64_t>(n.window_.size());
    n.acceptance_rate_ =
        attempts > 0 ? static_cast<double>(count) / static_cast<double>(attempts) : 1.0;
    return n;
}

NoiseRealization NoiseRealization::zero(int d, double epsilon, std::int64_t lo,
                                        std::int64_t hi) {
    NoiseRealization n;
    n.epsilon_ = epsilon;
    n.lo_ = lo;
    n.hi_ = hi;
    n.window_.assign(static_cast<std::size_t>(hi - lo), Matrix::Zero(d, d));
    return n;
}

const Matrix& NoiseRealization::delta(std::int64_t t) const {
    if (t < lo_ || t >= hi_)
        throw WindowUnderrun("noise window [" + std::to_string(lo_) + "," +
                             std::to_string(hi_) + ") queried at index " +
                             std::to_string(t));
    return window_[static_cast<std::size_t>(t - lo_)];
}

void NoiseRealization::set_delta(std::int64_t t, Matrix m) {
    if (t < lo_ || t >= hi_) throw WindowUnderrun("set_delta outside window");
    if (operator_norm(m) > 1.0 + 1e-12)
        throw ConfigError("noise", "perturbation operator norm exceeds 1");
    window_[static_cast<std::size_t>(t - lo_)] = std::move(m);
}

// ---------------------------------------------------------------------------
// Blocks and samplers

Matrix cocycle_block(const CocycleSystem& sys, OrbitPoint w, std::int64_t n) {
    if (n < 1) throw DimensionMismatch("cocycle_block: n must be >= 1");
    Matrix p = sys.matrix_at(w);
    for (std::int64_t k = 1; k < n; ++k) p = sys.matrix_at(shifted(w, k)) * p;
    return p;
}

Matrix perturbed_block(const CocycleSystem& sys, const NoiseRealization& noise,
                       OrbitPoint w, std::int64_t n) {
    if (n < 1) throw DimensionMismatch("perturbed_block: n must be >= 1");
    const double eps = noise.epsilon();
    Matrix p = sys.matrix_at(w) + eps * noise.delta(w.time);
    for (std::int64_t k = 1; k < n; ++k) {
        const OrbitPoint wk = shifted(w, k);
        p = (sys.matrix_at(wk) + eps * noise.delta(wk.time)) * p;
    }
    return p;
}

Matrix sample_operator_ball(Rng& rng, int d, std::int64_t* attempts) {
    if (d > 8)
        throw ConfigError("noise.d", "operator-ball rejection sampling capped at d <= 8");
    Matrix m(d, d);
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    std::int64_t local = 0;
    while (true) {
        ++local;
        if (local > 1000000)
            throw ConfigError("noise.d",
                              "operator-ball acceptance rate below 1e-6; use smaller d");
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
        const double fro = m.norm();
        if (fro <= 1.0) break;              // ||M||_op <= ||M||_F
        if (fro > sqrt_d) continue;         // ||M||_op >= ||M||_F / sqrt(d)
        if (operator_norm(m) <= 1.0) break;
    }
    if (attempts) *attempts += local;
    return m;
}

Matrix sample_entry_cube(Rng& rng, int j) {
    Matrix m(j, j);
    for (int r = 0; r < j; ++r)
        for (int c = 0; c < j; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
    return m;
}

std::int64_t block_length_for_epsilon(const CocycleSystem& sys, double epsilon,
                                      int mc_samples) {
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw ConfigError("epsilon", "block length policy needs eps in (0,1)");
    double acc = 0.0;
    for (int t = 0; t < mc_samples; ++t)
        acc += log_plus(operator_norm(sys.matrix_at({t})) + 1.0);
    const double mean = std::max(acc / mc_samples, 1e-6);
    const double c = 1.0 / (2.0 * mean);
    const auto n = static_cast<std::int64_t>(std::floor(c * std::abs(std::log(epsilon))));
    return std::max<std::int64_t>(n, 1);
}

// ---------------------------------------------------------------------------
// Zoo

namespace zoo {

namespace {
Matrix rot3(int axis, double theta) {
    Matrix r = Matrix::Identity(3, 3);
    const double c = std::cos(theta), s = std::sin(theta);
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    r(i, i) = c;
    r(i, j) = -s;
    r(j, i) = s;
    r(j, j) = c;
    return r;
}

Matrix diag3(double a, double b, double c) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}
}  // namespace

CocycleSystem constant(Matrix a) {
    return CocycleSystem(DrivingSystem::finite_orbit({0}),
                         Generator::constant(std::move(a)));
}

CocycleSystem constant_diagonal(const std::vector<double>& diag) {
    const int d = static_cast<int>(diag.size());
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = diag[i];
    return constant(std::move(m));
}

CocycleSystem bernoulli_diag_pair(std::uint64_t seed) {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 1.0;
    b(0, 0) = 1.0;
    b(1, 1) = 2.0;
    return CocycleSystem(DrivingSystem::bernoulli({0.5, 0.5}, seed),
                         Generator::matrix_table({a, b}));
}

CocycleSystem semi_invertible_showcase(std::uint64_t seed) {
    // Full-rank member, visited 10% of the time.
    const Matrix m0 = rot3(1, 0.20) * diag3(4.0, 1.6, 0.40) * rot3(2, 0.15);
    // Rank-2 member, visited 90% of the time; forces lambda_3 = -infinity.
    const Matrix m1 = rot3(2, 0.25) * diag3(4.0, 1.6, 0.0) * rot3(0, 0.20);
    return CocycleSystem(DrivingSystem::bernoulli({0.1, 0.9}, seed),
                         Generator::matrix_table({m0, m1}));
}

CocycleSystem invertible_showcase(std::uint64_t seed) {
    const Matrix m0 = rot3(1, 0.20) * diag3(4.0, 1.6, 0.40) * rot3(2, 0.15);
    const Matrix m1 = rot3(2, 0.25) * diag3(4.0, 1.6, 0.35) * rot3(0, 0.20);
    return CocycleSystem(DrivingSystem::bernoulli({0.1, 0.9}, seed),
                         Generator::matrix_table({m0, m1}));
}

CocycleSystem rotation_fourier() {
    Matrix c0 = Matrix::Zero(2, 2), c1 = Matrix::Zero(2, 2), s1 = Matrix::Zero(2, 2);
    c0(0, 0) = 2.0;
    c0(1, 1) = 0.6;
    c1(0, 1) = 0.45;
    c1(1, 0) = 0.45;
    s1(0, 0) = 0.35;
    s1(1, 1) = -0.35;
    const double golden = 0.61803398874989484820;
    return CocycleSystem(DrivingSystem::rotation(golden),
                         Generator::fourier(c0, c1, s1));
}

}  // namespace zoo

}  // namespace stochstab
