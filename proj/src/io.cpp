#include "stochstab/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stochstab {

namespace {

Matrix matrix_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(field, "expected a row-major array of arrays");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw ConfigError(field, "ragged matrix rows");
        for (int c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw ConfigError(field, "matrix entries must be numbers");
            const double v = j[r][c].get<double>();
            if (!std::isfinite(v)) throw ConfigError(field, "matrix entries must be finite");
            m(r, c) = v;
        }
    }
    return m;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

template <typename T>
T require(const Json& j, const std::string& field, const char* key) {
    if (!j.contains(key)) throw ConfigError(field + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(field + "." + key, e.what());
    }
}

template <typename T>
T optional_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

DrivingSystem driver_from_json(const Json& j) {
    const auto kind = require<std::string>(j, "driver", "kind");
    if (kind == "bernoulli") {
        return DrivingSystem::bernoulli(
            require<std::vector<double>>(j, "driver", "probabilities"),
            require<std::uint64_t>(j, "driver", "seed"));
    }
    if (kind == "rotation") {
        return DrivingSystem::rotation(require<double>(j, "driver", "alpha"),
                                       optional_or<double>(j, "theta0", 0.0));
    }
    if (kind == "finite_orbit") {
        return DrivingSystem::finite_orbit(
            require<std::vector<int>>(j, "driver", "sequence"));
    }
    throw ConfigError("driver.kind", "unknown kind '" + kind + "'");
}

Generator generator_from_json(const Json& j) {
    const auto kind = require<std::string>(j, "generator", "kind");
    if (kind == "matrix_table") {
        if (!j.contains("matrices")) throw ConfigError("generator.matrices", "missing");
        std::vector<Matrix> ms;
        for (std::size_t i = 0; i < j.at("matrices").size(); ++i)
            ms.push_back(matrix_from_json(j.at("matrices")[i],
                                          "generator.matrices[" + std::to_string(i) + "]"));
        return Generator::matrix_table(std::move(ms));
    }
    if (kind == "constant") {
        if (!j.contains("matrix")) throw ConfigError("generator.matrix", "missing");
        return Generator::constant(matrix_from_json(j.at("matrix"), "generator.matrix"));
    }
    if (kind == "fourier") {
        for (const char* key : {"c0", "c1", "s1"})
            if (!j.contains(key))
                throw ConfigError(std::string("generator.") + key, "missing");
        return Generator::fourier(matrix_from_json(j.at("c0"), "generator.c0"),
                                  matrix_from_json(j.at("c1"), "generator.c1"),
                                  matrix_from_json(j.at("s1"), "generator.s1"));
    }
    throw ConfigError("generator.kind", "unknown kind '" + kind + "'");
}

CocycleSystem zoo_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "semi_invertible_showcase") return zoo::semi_invertible_showcase(seed);
    if (name == "invertible_showcase") return zoo::invertible_showcase(seed);
    if (name == "bernoulli_diag_pair") return zoo::bernoulli_diag_pair(seed);
    if (name == "rotation_fourier") return zoo::rotation_fourier();
    throw ConfigError("cocycle.zoo", "unknown zoo cocycle '" + name + "'");
}

}  // namespace

CocycleSystem cocycle_from_json(const Json& j) {
    if (j.contains("zoo"))
        return zoo_by_name(j.at("zoo").get<std::string>(),
                           optional_or<std::uint64_t>(j, "seed", 17));
    if (!j.contains("driver")) throw ConfigError("cocycle.driver", "missing");
    if (!j.contains("generator")) throw ConfigError("cocycle.generator", "missing");
    DrivingSystem drv = driver_from_json(j.at("driver"));
    Generator gen = generator_from_json(j.at("generator"));
    if (j.contains("d") && j.at("d").get<int>() != gen.dim())
        throw ConfigError("cocycle.d", "does not match generator dimension");
    return CocycleSystem(std::move(drv), std::move(gen));
}

RunConfig parse_run_config(const Json& j) {
    RunConfig cfg;
    cfg.raw = j;
    if (!j.contains("cocycle")) throw ConfigError("cocycle", "missing");
    cfg.cocycle_spec = j.at("cocycle");
    cocycle_from_json(cfg.cocycle_spec);  // validate eagerly

    ExperimentConfig& e = cfg.experiment;
    if (j.contains("experiment")) {
        const Json& je = j.at("experiment");
        e.j_index = optional_or<int>(je, "j_index", e.j_index);
        e.n_time = optional_or<std::int64_t>(je, "n_time", e.n_time);
        const auto policy = optional_or<std::string>(je, "block_policy", "fixed");
        if (policy == "c_log_eps")
            e.c_log_eps_policy = true;
        else if (policy != "fixed")
            throw ConfigError("experiment.block_policy", "must be fixed or c_log_eps");
        e.block_length = optional_or<std::int64_t>(je, "block_length", e.block_length);
        e.n_blocks = optional_or<int>(je, "n_blocks", e.n_blocks);
        e.reference_factor =
            optional_or<int>(je, "reference_factor", e.reference_factor);
        e.workers = optional_or<int>(je, "workers", e.workers);
        e.census_lengths = optional_or<std::vector<std::int64_t>>(
            je, "census_lengths", e.census_lengths);
    }
    if (j.contains("thresholds")) {
        const Json& jt = j.at("thresholds");
        e.thresholds.chi = optional_or<double>(jt, "chi", e.thresholds.chi);
        e.thresholds.tau = optional_or<double>(jt, "tau", e.thresholds.tau);
        e.thresholds.kappa = optional_or<double>(jt, "kappa", e.thresholds.kappa);
        e.thresholds.delta = optional_or<double>(jt, "delta", e.thresholds.delta);
        e.thresholds.K_threshold =
            optional_or<double>(jt, "K_threshold", e.thresholds.K_threshold);
    }
    if (!j.contains("run")) throw ConfigError("run", "missing");
    const Json& jr = j.at("run");
    e.epsilon_list = require<std::vector<double>>(jr, "run", "epsilon_list");
    e.n_trials = require<int>(jr, "run", "n_trials");
    e.seed = require<std::uint64_t>(jr, "run", "seed");
    e.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& err) {
        throw ConfigError("", std::string("JSON parse error: ") + err.what());
    }
    return parse_run_config(j);
}

std::string cocycle_hash(const Json& cocycle_spec) {
    const std::string canon = cocycle_spec.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string csv_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string table_to_csv(const ConvergenceTable& table) {
    std::ostringstream os;
    os << "epsilon,index,estimate,stderr,n_trials,flag\n";
    for (const TableRow& r : table.rows)
        os << csv_double(r.epsilon) << ',' << r.index << ','
           << csv_double(r.estimate) << ',' << csv_double(r.stderr_) << ','
           << r.n_trials << ',' << r.flag << '\n';
    return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("", "cannot write " + path);
    out << contents;
}

namespace {
// JSON number or {"neg_inf": true} marker; JSON has no infinity literal.
Json num_or_flag(double x) {
    if (std::isinf(x) && x < 0) return Json{{"neg_inf", true}};
    if (!std::isfinite(x)) return nullptr;
    return x;
}
}  // namespace

Json to_json(const Subspace& s) {
    return Json{{"dim_ambient", s.ambient_dim()},
                {"dim", s.dim()},
                {"basis", matrix_to_json(s.basis())}};
}

Json to_json(const LyapunovGroup& g) {
    return Json{{"exponent", num_or_flag(g.exponent)},
                {"multiplicity", g.multiplicity}};
}

Json to_json(const SpectrumReport& r) {
    Json exps = Json::array(), ses = Json::array(), groups = Json::array();
    for (double m : r.exponents) exps.push_back(num_or_flag(m));
    for (double s : r.stderrs) ses.push_back(s);
    for (const auto& g : r.grouped) groups.push_back(to_json(g));
    return Json{{"exponents", exps},
                {"stderr", ses},
                {"grouped", groups},
                {"n_used", r.n_used},
                {"resolution_warning", r.resolution_warning}};
}

Json to_json(const SplittingReport& r) {
    Json fast = Json::array(), slow = Json::array(), comps = Json::array(),
         perps = Json::array();
    for (const auto& s : r.fast) fast.push_back(to_json(s));
    for (const auto& s : r.slow) slow.push_back(to_json(s));
    for (const auto& s : r.components) comps.push_back(to_json(s));
    for (double p : r.perps) perps.push_back(p);
    return Json{{"boundaries", r.boundaries}, {"fast", fast},
                {"slow", slow},               {"components", comps},
                {"perp", perps},              {"spectrum", to_json(r.spectrum)}};
}

Json to_json(const ConvergenceTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back(Json{{"epsilon", r.epsilon},
                            {"index", r.index},
                            {"estimate", num_or_flag(r.estimate)},
                            {"stderr", r.stderr_},
                            {"n_trials", r.n_trials},
                            {"flag", r.flag}});
    return rows;
}

Json to_json(const IntegralBoundReport& r) {
    return Json{{"lemma", r.lemma_id},
                {"parameters", r.parameters},
                {"observed_min", num_or_flag(r.observed_min)},
                {"claimed_bound", r.claimed_bound},
                {"margin", num_or_flag(r.margin)},
                {"quadrature_error_estimate", r.quadrature_error_estimate},
                {"pass", r.pass},
                {"vacuous", r.vacuous}};
}

Json to_json(const MonteCarloBoundReport& r) {
    return Json{{"estimate", num_or_flag(r.estimate)},
                {"stderr", r.stderr_},
                {"claimed_bound", r.claimed_bound},
                {"pass", r.pass},
                {"vacuous", r.vacuous},
                {"n_samples", r.n_samples}};
}

Json to_json(const GlueCostReport& r) {
    return Json{{"epsilon", r.epsilons},     {"estimates", r.estimates},
                {"stderr", r.stderrs},       {"k_fit", r.k_fit},
                {"k_fit_stderr", r.k_fit_stderr}, {"c0_fit", r.c0_fit},
                {"pass", r.pass}};
}

Json to_json(const ExponentReport& r) {
    Json diffs = Json::array();
    for (double d : r.abs_diff) diffs.push_back(num_or_flag(d));
    return Json{{"table", to_json(r.table)},
                {"reference", to_json(r.reference)},
                {"abs_diff", diffs},
                {"spearman", r.spearman},
                {"restored_indices", r.restored_indices},
                {"restored_slopes", r.restored_slopes}};
}

Json to_json(const SpaceReport& r) {
    return Json{{"table", to_json(r.table)},
                {"reference", to_json(r.reference)},
                {"boundary", r.boundary},
                {"chi", r.chi},
                {"tau", r.tau},
                {"epsilon", r.eps},
                {"p_exceed_fast", r.p_exceed_fast},
                {"se_fast", r.se_fast},
                {"mean_angle_fast", r.mean_angle_fast},
                {"p_exceed_component", r.p_exceed_comp},
                {"se_component", r.se_comp},
                {"mean_angle_component", r.mean_angle_comp},
                {"window_edge_flags", r.window_edge_flags},
                {"failed_trials", r.failed_trials}};
}

Json to_json(const GrassmannReport& r) {
    return Json{{"table", to_json(r.table)},
                {"epsilon", r.eps},
                {"block_length", r.block_length},
                {"median_bn", r.median_bn},
                {"median_bn_dev", r.median_bn_dev},
                {"frac_bn_large", r.frac_bn_large},
                {"escape_rate", r.escape_rate},
                {"max_chart_direct_angle", r.max_chart_direct_angle},
                {"mean_angle_to_ref", r.mean_angle_to_ref}};
}

Json to_json(const CensusReport& r) {
    return Json{{"table", to_json(r.table)},
                {"lengths", r.lengths},
                {"frequency", r.frequency},
                {"boundary", r.boundary},
                {"n_trials", r.n_trials}};
}

Json make_envelope(const RunConfig& cfg, Json results) {
    return Json{{"config", cfg.raw},
                {"seed", cfg.experiment.seed},
                {"cocycle_hash", cocycle_hash(cfg.cocycle_spec)},
                {"results", std::move(results)}};
}

}  // namespace stochstab
