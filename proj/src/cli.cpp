#include "hdiv/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "hdiv/error.hpp"
#include "hdiv/estimator.hpp"
#include "hdiv/inference.hpp"
#include "hdiv/io.hpp"
#include "hdiv/linalg.hpp"
#include "hdiv/parallel.hpp"
#include "hdiv/random.hpp"
#include "hdiv/regularized_matrices.hpp"
#include "hdiv/simulation.hpp"
#include "hdiv/svg.hpp"
#include "hdiv/tuning.hpp"

namespace hdiv::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v(i)));
    return out;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("config '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw DataError("config '" + path + "' must hold a JSON object");
    return cfg;
}

void check_keys(const json& cfg, const std::vector<std::string>& allowed) {
    for (const auto& item : cfg.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw DataError("config: unknown key '" + item.key() + "'");
        }
    }
}

/// CLI flag wins over config key, which wins over the default already in `target`.
/// Returns true if the value came from either source.
template <class T>
bool resolve(const CLI::App& app, const std::string& flag, const json& cfg, const std::string& key,
             T& target) {
    if (app.count(flag) > 0) return true;
    if (!cfg.contains(key)) return false;
    try {
        target = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError("config: key '" + key + "' has the wrong type");
    }
    return true;
}

bool resolve_list(const CLI::App& app, const std::string& flag, const json& cfg,
                  const std::string& key, std::vector<double>& target) {
    if (app.count(flag) > 0) return true;
    if (!cfg.contains(key)) return false;
    const auto& v = cfg.at(key);
    try {
        target = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    } catch (const json::exception&) {
        throw DataError("config: key '" + key + "' must be a number or a list of numbers");
    }
    return true;
}

unsigned pick_threads(bool given, int flag_value) {
    int requested = 0;
    if (given) {
        requested = flag_value;
    } else if (const char* env = std::getenv("HDIV_THREADS"); env != nullptr && *env != '\0') {
        double v = 0.0;
        if (!io::parse_double(env, v) || v < 0 || v != std::floor(v)) {
            throw DataError(std::string("HDIV_THREADS must be a non-negative integer, got '") +
                            env + "'");
        }
        requested = static_cast<int>(v);
    }
    if (requested < 0) throw DataError("--threads must be non-negative");
    return resolve_threads(static_cast<unsigned>(requested));
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

json manifest(const std::string& command, const json& resolved, std::uint64_t seed,
              unsigned threads, const std::string& start, const std::vector<std::string>& deviations,
              const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config"] = resolved;
    m["config_digest"] = io::fnv1a_hex(resolved.dump());
    m["seed"] = seed;
    m["threads"] = threads;
    m["tool_version"] = kToolVersion;
    m["generator_version"] = kGeneratorVersion;
    m["timestamps"] = {{"start", start}, {"end", utc_now()}};
    m["deviations"] = deviations;
    m["outputs"] = outputs;
    return m;
}

json cv_json(const CVResult& cv) {
    return {{"chosen", cv.chosen_lambda}, {"grid", cv.grid}, {"cv_curve", cv.cv_curve}};
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string y, x, z;
    std::string out = "hdiv_out";
    std::string target;
    std::string cov = "sandwich";
    std::string config;
    double lambda = 0.0;
    double lambda_node = 0.0;
    double lambda_node_m = 0.0;
    double c0 = 0.5;
    double level = 0.95;
    double lambda0 = -1.0;
    std::uint64_t seed = 1;
    int threads = 0;
    int folds = 10;
    bool cv = false;
    bool cv_node = false;
    bool center = false;
    bool header = false;
    bool exact = false;
};

struct Target {
    std::string id;
    Vector a;
};

std::vector<Target> parse_targets(const std::string& spec, Eigen::Index p) {
    std::vector<Target> out;
    if (spec.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) out.push_back({"beta_" + std::to_string(j + 1), Vector::Unit(p, j)});
        return out;
    }
    const bool index_list = spec.find_first_not_of("0123456789, ") == std::string::npos;
    if (index_list) {
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            double v = 0.0;
            if (!io::parse_double(tok, v) || v != std::floor(v)) {
                throw DataError("--target: '" + tok + "' is not a coefficient index");
            }
            if (v < 1 || v > static_cast<double>(p)) {
                throw DataError("--target: index " + tok + " outside 1.." + std::to_string(p));
            }
            const auto j = static_cast<Eigen::Index>(v) - 1;
            out.push_back({"beta_" + std::to_string(j + 1), Vector::Unit(p, j)});
        }
        if (out.empty()) throw DataError("--target: no indices given");
        return out;
    }
    const Matrix m = io::read_csv_matrix(spec, false);
    if (m.cols() == p) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back({"a_" + std::to_string(r + 1), m.row(r).transpose()});
    } else if (m.cols() == 1 && m.rows() == p) {
        out.push_back({"a_1", m.col(0)});
    } else {
        throw DataError("--target file '" + spec + "': each row must hold " + std::to_string(p) +
                        " coefficients");
    }
    return out;
}

json certificates_json(const std::vector<RowCertificate>& rows) {
    json out = json::array();
    for (std::size_t j = 0; j < rows.size(); ++j) {
        out.push_back({{"row", j + 1},
                       {"observed", finite_or_null(rows[j].observed)},
                       {"bound", finite_or_null(rows[j].bound)}});
    }
    return out;
}

json structural_certificates_json(const std::vector<StructuralCertificate>& rows) {
    json out = json::array();
    for (std::size_t j = 0; j < rows.size(); ++j) {
        out.push_back({{"row", j + 1},
                       {"observed", finite_or_null(rows[j].observed)},
                       {"bound", finite_or_null(rows[j].bound)},
                       {"observed_symmetric", finite_or_null(rows[j].observed_symmetric)},
                       {"observed_raw", finite_or_null(rows[j].observed_raw)}});
    }
    return out;
}

int run_estimate(CLI::App& app, const EstimateArgs& parsed, std::ostream& out) {
    const std::string start = utc_now();
    EstimateArgs a = parsed;
    const json cfg = load_config(a.config);
    check_keys(cfg, {"y", "x", "z", "out", "target", "cov", "lambda", "lambda_node",
                     "lambda_node_m", "c0", "level", "lambda0", "seed", "threads", "folds", "cv",
                     "cv_node", "center", "header", "exact"});
    resolve(app, "--y", cfg, "y", a.y);
    resolve(app, "--x", cfg, "x", a.x);
    resolve(app, "--z", cfg, "z", a.z);
    resolve(app, "--out", cfg, "out", a.out);
    resolve(app, "--target", cfg, "target", a.target);
    resolve(app, "--cov", cfg, "cov", a.cov);
    const bool lambda_given = resolve(app, "--lambda", cfg, "lambda", a.lambda);
    const bool node_given = resolve(app, "--lambda-node", cfg, "lambda_node", a.lambda_node);
    const bool node_m_given = resolve(app, "--lambda-node-m", cfg, "lambda_node_m", a.lambda_node_m);
    resolve(app, "--c0", cfg, "c0", a.c0);
    resolve(app, "--level", cfg, "level", a.level);
    const bool lambda0_given = resolve(app, "--lambda0", cfg, "lambda0", a.lambda0);
    resolve(app, "--seed", cfg, "seed", a.seed);
    const bool threads_given = resolve(app, "--threads", cfg, "threads", a.threads);
    resolve(app, "--folds", cfg, "folds", a.folds);
    resolve(app, "--cv", cfg, "cv", a.cv);
    resolve(app, "--cv-node", cfg, "cv_node", a.cv_node);
    resolve(app, "--center", cfg, "center", a.center);
    resolve(app, "--header", cfg, "header", a.header);
    resolve(app, "--exact", cfg, "exact", a.exact);

    for (const auto& [name, value] : {std::pair{"--y", &a.y}, {"--x", &a.x}, {"--z", &a.z}}) {
        if (value->empty()) throw DataError(std::string("missing required option ") + name);
    }
    if (a.cv && lambda_given) throw DataError("--lambda and --cv are mutually exclusive");
    if (a.cv_node && (node_given || node_m_given)) {
        throw DataError("--cv-node and --lambda-node/--lambda-node-m are mutually exclusive");
    }
    if (a.cov != "sandwich" && a.cov != "homoscedastic") {
        throw DataError("--cov must be 'sandwich' or 'homoscedastic'");
    }
    if (!(a.level > 0.0 && a.level < 1.0)) throw DataError("--level must lie in (0, 1)");
    if (lambda0_given && a.lambda0 < 0.0) throw DataError("--lambda0 must be non-negative");
    const unsigned threads = pick_threads(threads_given, a.threads);

    IVDataset data = io::load_dataset_csv(a.y, a.x, a.z, a.header);
    if (a.center) data = center_columns(std::move(data));
    const auto targets = parse_targets(a.target, data.p());

    std::vector<std::string> deviations;
    TuningConfig tuning;
    tuning.c0 = a.exact ? 0.0 : a.c0;
    tuning.lambda = a.lambda;
    tuning.lambda_node = a.lambda_node;
    tuning.lambda_node_m = a.lambda_node_m;
    validate_tuning(tuning);

    CVConfig cv;
    cv.folds = a.folds;
    cv.seed = a.seed;
    const bool low_dim = data.n() > data.q();
    std::map<std::string, CVResult> cv_runs;
    json sources;

    if (a.exact) {
        tuning.lambda_node = 0.0;
        tuning.lambda_node_m = 0.0;
        sources["lambda_node"] = "exact";
        sources["lambda_node_m"] = "exact";
    } else {
        if (a.cv_node || (!node_given && !low_dim)) {
            const auto res = cv_nodewise_lambda(data.z, cv, GramScale::mean, tuning.solver(), threads);
            tuning.lambda_node = res.chosen_lambda;
            cv_runs["lambda_node"] = res;
            sources["lambda_node"] = "cv";
        } else {
            sources["lambda_node"] = node_given ? "given" : "default-low-dimensional";
        }
        if (a.cv_node || (!node_m_given && !low_dim)) {
            const auto prec =
                estimate_precision_nodewise(data.z, tuning.lambda_node, tuning.solver(), threads);
            const auto cross = threshold_cross_moment(data.z, data.x, tuning.c0);
            const Matrix b = symmetric_psd_sqrt(prec.theta_hat, kSqrtFloor) * cross.m_hat;
            if (b.cols() < 2) {
                tuning.lambda_node_m = 0.0;
                sources["lambda_node_m"] = "single-column";
            } else {
                const auto res = cv_nodewise_lambda(b, cv, GramScale::sum, tuning.solver(), threads);
                tuning.lambda_node_m = res.chosen_lambda;
                cv_runs["lambda_node_m"] = res;
                sources["lambda_node_m"] = "cv";
            }
        } else {
            sources["lambda_node_m"] = node_m_given ? "given" : "default-low-dimensional";
        }
        if (!node_given && !node_m_given && !a.cv_node && low_dim) {
            deviations.push_back("n > q: nodewise penalties default to 0 (exact inverses)");
        }
    }
    if (lambda_given) {
        sources["lambda"] = "given";
    } else {
        const auto res = cv_iv_lasso_lambda(data, cv, tuning, threads);
        tuning.lambda = res.chosen_lambda;
        cv_runs["lambda"] = res;
        sources["lambda"] = "cv";
    }

    std::shared_ptr<const RegularizedMatrices> matrices;
    if (a.exact) {
        matrices = std::make_shared<const RegularizedMatrices>(exact_inverses(data.z, data.x));
    } else {
        matrices = std::make_shared<const RegularizedMatrices>(
            build_regularized_matrices(data, tuning, threads));
    }
    const LassoFit lasso = fit_iv_lasso(data, *matrices, tuning.lambda, tuning.solver());
    const EstimateBundle bundle = desparsify(data, lasso.coefficients, matrices);

    CovarianceEstimate cov;
    std::optional<ScaledLassoResult> scaled;
    const double lambda0 =
        lambda0_given ? a.lambda0
                      : std::sqrt(2.0 * std::log(static_cast<double>(data.p())) / data.n());
    if (a.cov == "sandwich") {
        cov = estimate_covariance_sandwich(bundle, data.z);
    } else {
        scaled = scaled_lasso_sigma(data, *matrices, lambda0, tuning.solver());
        cov = estimate_covariance_homoscedastic(matrices->structural_inverse,
                                                scaled->sigma_hat * scaled->sigma_hat);
    }

    std::optional<double> omega2;
    try {
        omega2 = omega2_hat(matrices->precision, matrices->cross_moment);
    } catch (const NumericalError& e) {
        deviations.push_back(std::string("omega2_hat unavailable: ") + e.what());
    }

    io::CsvTable intervals;
    intervals.columns = {"target", "center", "lower", "upper", "width", "statistic", "p_value"};
    const Vector zero = Vector::Zero(data.p());
    for (const auto& t : targets) {
        const auto ci = confidence_interval(bundle, cov, t.a, a.level);
        const auto test = wald_test(bundle, cov, t.a, zero, 1.0 - a.level);
        intervals.rows.push_back({t.id, io::format_double(ci.center), io::format_double(ci.lower),
                                  io::format_double(ci.upper),
                                  io::format_double(ci.upper - ci.lower),
                                  io::format_double(test.statistic),
                                  io::format_double(test.p_value)});
    }

    json resolved;
    resolved["y"] = a.y;
    resolved["x"] = a.x;
    resolved["z"] = a.z;
    resolved["out"] = a.out;
    resolved["target"] = a.target;
    resolved["cov"] = a.cov;
    resolved["lambda"] = tuning.lambda;
    resolved["lambda_node"] = tuning.lambda_node;
    resolved["lambda_node_m"] = tuning.lambda_node_m;
    resolved["c0"] = tuning.c0;
    resolved["level"] = a.level;
    resolved["lambda0"] = lambda0;
    resolved["seed"] = a.seed;
    resolved["folds"] = a.folds;
    resolved["cv"] = a.cv;
    resolved["cv_node"] = a.cv_node;
    resolved["center"] = a.center;
    resolved["header"] = a.header;
    resolved["exact"] = a.exact;

    make_dir(a.out);
    std::vector<std::string> outputs = {"estimates.json", "intervals.csv", "manifest.json"};
    for (const auto& [stage, res] : cv_runs) {
        const std::string name = "cv_" + stage + ".svg";
        svg::PlotSpec spec{"Cross-validation: " + stage, "lambda", "held-out loss"};
        io::write_text_file((fs::path(a.out) / name).string(),
                            svg::cv_curve_plot(res.grid, res.cv_curve, res.chosen_lambda, spec));
        outputs.push_back(name);
    }
    const json man = manifest("estimate", resolved, a.seed, threads, start, deviations, outputs);

    json est;
    est["config_digest"] = man["config_digest"];
    est["n"] = data.n();
    est["p"] = data.p();
    est["q"] = data.q();
    est["beta_tilde"] = to_json(bundle.beta_tilde);
    est["beta_hat"] = to_json(bundle.beta_hat);
    est["penalties"] = {{"lambda", tuning.lambda},
                        {"lambda_node", tuning.lambda_node},
                        {"lambda_node_m", tuning.lambda_node_m},
                        {"c0", tuning.c0},
                        {"source", sources}};
    json cvj = json::object();
    for (const auto& [stage, res] : cv_runs) cvj[stage] = cv_json(res);
    est["cross_validation"] = cvj;
    est["lasso"] = {{"objective", lasso.objective},
                    {"kkt_residual", lasso.kkt_residual},
                    {"sweeps", lasso.sweeps_used},
                    {"converged", lasso.converged}};
    est["omega2_hat"] = omega2 ? json(*omega2) : json(nullptr);
    est["covariance"] = {{"mode", to_string(cov.mode)},
                         {"sigma_hat", scaled ? json(scaled->sigma_hat) : json(nullptr)}};
    est["certificates"] = {
        {"precision", certificates_json(matrices->precision.certificates)},
        {"structural_inverse", structural_certificates_json(matrices->structural_inverse.certificates)}};
    est["threshold"] = {{"level", matrices->cross_moment.threshold},
                        {"kept", matrices->cross_moment.kept_count}};

    const fs::path dir(a.out);
    io::write_text_file((dir / "estimates.json").string(), est.dump(2) + "\n");
    io::write_text_file((dir / "intervals.csv").string(), io::render_csv(intervals));
    io::write_text_file((dir / "manifest.json").string(), man.dump(2) + "\n");
    out << "wrote " << outputs.size() << " files to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::vector<double> rho{0.5};
    std::vector<double> alpha1{1.0};
    int n = 100;
    int p = 200;
    int q = 200;
    int reps = 1000;
    std::uint64_t seed = 20190101;
    double level = 0.95;
    std::string tuning = "once";
    std::string out = "hdiv_sim";
    std::string config;
    int threads = 0;
    int folds = 10;
    double lambda = 0.0;
    double lambda_node = 0.0;
    double lambda_node_m = 0.0;
    double c0 = 0.5;
    double lambda0 = -1.0;
};

std::string cell_tag(double rho, double alpha1) {
    return short_number(rho) + "_" + short_number(alpha1);
}

int run_simulate(CLI::App& app, const SimulateArgs& parsed, std::ostream& out) {
    const std::string start = utc_now();
    SimulateArgs a = parsed;
    const json cfg = load_config(a.config);
    check_keys(cfg, {"rho", "alpha1", "n", "p", "q", "reps", "seed", "level", "tuning", "out",
                     "threads", "folds", "lambda", "lambda_node", "lambda_node_m", "c0",
                     "lambda0"});
    resolve_list(app, "--rho", cfg, "rho", a.rho);
    resolve_list(app, "--alpha1", cfg, "alpha1", a.alpha1);
    resolve(app, "--n", cfg, "n", a.n);
    resolve(app, "--p", cfg, "p", a.p);
    resolve(app, "--q", cfg, "q", a.q);
    resolve(app, "--reps", cfg, "reps", a.reps);
    resolve(app, "--seed", cfg, "seed", a.seed);
    resolve(app, "--level", cfg, "level", a.level);
    resolve(app, "--tuning", cfg, "tuning", a.tuning);
    resolve(app, "--out", cfg, "out", a.out);
    const bool threads_given = resolve(app, "--threads", cfg, "threads", a.threads);
    resolve(app, "--folds", cfg, "folds", a.folds);
    resolve(app, "--lambda", cfg, "lambda", a.lambda);
    resolve(app, "--lambda-node", cfg, "lambda_node", a.lambda_node);
    resolve(app, "--lambda-node-m", cfg, "lambda_node_m", a.lambda_node_m);
    resolve(app, "--c0", cfg, "c0", a.c0);
    const bool lambda0_given = resolve(app, "--lambda0", cfg, "lambda0", a.lambda0);
    const unsigned threads = pick_threads(threads_given, a.threads);
    if (a.rho.empty() || a.alpha1.empty()) throw DataError("need at least one rho and one alpha1");

    SimulationConfig base;
    base.n = a.n;
    base.p = a.p;
    base.q = a.q;
    base.replications = a.reps;
    base.seed = a.seed;
    base.level = a.level;
    base.tuning = parse_tuning_mode(a.tuning);
    base.cv_folds = a.folds;
    base.penalties.lambda = a.lambda;
    base.penalties.lambda_node = a.lambda_node;
    base.penalties.lambda_node_m = a.lambda_node_m;
    base.penalties.c0 = a.c0;
    if (lambda0_given) base.lambda0 = a.lambda0;

    // validate every cell before any work
    for (const double rho : a.rho) {
        for (const double alpha1 : a.alpha1) {
            SimulationConfig c = base;
            c.rho = rho;
            c.alpha1 = alpha1;
            validate_simulation(c);
        }
    }

    io::CsvTable table;
    table.columns = {"rho", "alpha1", "abs_mean_bias_desparsified", "abs_mean_bias_lasso",
                     "coverage", "mean_width", "failures"};
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::string> deviations;
    json cells = json::array();

    for (const double rho : a.rho) {
        for (const double alpha1 : a.alpha1) {
            SimulationConfig c = base;
            c.rho = rho;
            c.alpha1 = alpha1;
            const SimulationTruth truth = build_truth(c);
            const MonteCarloResult res = run_monte_carlo(truth, c, threads);
            const auto& s = res.summary;
            for (const auto& d : res.deviations) {
                if (std::find(deviations.begin(), deviations.end(), d) == deviations.end()) {
                    deviations.push_back(d);
                }
            }
            table.rows.push_back({io::format_double(rho), io::format_double(alpha1),
                                  io::format_double(s.abs_mean_bias_desparsified),
                                  io::format_double(s.abs_mean_bias_lasso),
                                  io::format_double(s.coverage), io::format_double(s.mean_ci_width),
                                  std::to_string(s.replication_failures)});

            const std::string tag = cell_tag(rho, alpha1);
            const auto qq = qq_points(s.standardized_stats);
            io::CsvTable qq_csv;
            qq_csv.columns = {"theoretical_quantile", "empirical_quantile"};
            for (const auto& [t, e] : qq) qq_csv.rows.push_back({io::format_double(t), io::format_double(e)});
            files.emplace_back("qq_" + tag + ".csv", io::render_csv(qq_csv));
            svg::PlotSpec spec{"Normal Q-Q plot, rho = " + short_number(rho) +
                                   ", alpha1 = " + short_number(alpha1),
                               "standard normal quantile", "standardized statistic"};
            files.emplace_back("qq_" + tag + ".svg", svg::qq_plot(qq, spec));

            io::CsvTable reps;
            reps.columns = {"replication", "seed", "ok", "beta_hat_1", "beta_tilde_1", "ci_lower",
                            "ci_upper", "covered", "standardized", "sigma_hat",
                            "identity_residual", "failure"};
            for (const auto& r : res.records) {
                reps.rows.push_back({std::to_string(r.index), std::to_string(r.seed),
                                     r.ok ? "1" : "0", io::format_double(r.beta_hat_1),
                                     io::format_double(r.beta_tilde_1), io::format_double(r.ci_lower),
                                     io::format_double(r.ci_upper), r.covered ? "1" : "0",
                                     io::format_double(r.standardized), io::format_double(r.sigma_hat),
                                     io::format_double(r.identity_residual), r.failure});
            }
            files.emplace_back("replications_" + tag + ".csv", io::render_csv(reps));

            cells.push_back({{"rho", rho},
                             {"alpha1", alpha1},
                             {"omega2_pop", truth.omega2_pop},
                             {"penalties",
                              {{"lambda", res.penalties.lambda},
                               {"lambda_node", res.penalties.lambda_node},
                               {"lambda_node_m", res.penalties.lambda_node_m},
                               {"c0", res.penalties.c0}}},
                             {"successful", s.successful},
                             {"failures", s.replication_failures}});
            out << "rho=" << short_number(rho) << " alpha1=" << short_number(alpha1)
                << " bias_hat=" << s.abs_mean_bias_desparsified
                << " bias_tilde=" << s.abs_mean_bias_lasso << " coverage=" << s.coverage
                << " failures=" << s.replication_failures << "\n";
        }
    }
    files.insert(files.begin(), {"table1.csv", io::render_csv(table)});

    json resolved;
    resolved["rho"] = a.rho;
    resolved["alpha1"] = a.alpha1;
    resolved["n"] = a.n;
    resolved["p"] = a.p;
    resolved["q"] = a.q;
    resolved["reps"] = a.reps;
    resolved["seed"] = a.seed;
    resolved["level"] = a.level;
    resolved["tuning"] = a.tuning;
    resolved["out"] = a.out;
    resolved["folds"] = a.folds;
    resolved["lambda"] = a.lambda;
    resolved["lambda_node"] = a.lambda_node;
    resolved["lambda_node_m"] = a.lambda_node_m;
    resolved["c0"] = a.c0;
    resolved["lambda0"] = lambda0_given ? json(a.lambda0) : json("sqrt(2 log p / n)");

    std::vector<std::string> outputs;
    for (const auto& f : files) outputs.push_back(f.first);
    outputs.push_back("summary.json");
    outputs.push_back("manifest.json");
    const json man = manifest("simulate", resolved, a.seed, threads, start, deviations, outputs);
    json summary;
    summary["config_digest"] = man["config_digest"];
    summary["cells"] = cells;

    make_dir(a.out);
    const fs::path dir(a.out);
    for (const auto& [name, content] : files) io::write_text_file((dir / name).string(), content);
    io::write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
    io::write_text_file((dir / "manifest.json").string(), man.dump(2) + "\n");
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Desparsified IV Lasso: estimation and Monte Carlo simulation", "hdiv"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "Estimate beta with confidence intervals");
    est->add_option("--y", ea.y, "Response CSV (one column)");
    est->add_option("--x", ea.x, "Covariate CSV (n x p)");
    est->add_option("--z", ea.z, "Instrument CSV (n x q)");
    est->add_option("--lambda", ea.lambda, "IV Lasso penalty");
    est->add_flag("--cv", ea.cv, "Cross-validate the IV Lasso penalty");
    est->add_option("--lambda-node", ea.lambda_node, "Nodewise penalty for the precision estimate");
    est->add_option("--lambda-node-m", ea.lambda_node_m,
                    "Nodewise penalty for the structural inverse");
    est->add_flag("--cv-node", ea.cv_node, "Cross-validate both nodewise penalties");
    est->add_option("--c0", ea.c0, "Threshold constant for the cross moment");
    est->add_option("--target", ea.target,
                    "Comma-separated 1-based coefficient indices, or a CSV of target vectors");
    est->add_option("--level", ea.level, "Confidence level");
    est->add_option("--cov", ea.cov, "sandwich | homoscedastic");
    est->add_option("--lambda0", ea.lambda0, "Scaled Lasso penalty (homoscedastic mode)");
    est->add_option("--out", ea.out, "Output directory");
    est->add_option("--seed", ea.seed, "Seed for fold assignment");
    est->add_option("--folds", ea.folds, "Cross-validation folds");
    est->add_option("--threads", ea.threads, "Worker threads (0 = all; env HDIV_THREADS)");
    est->add_option("--config", ea.config, "JSON config; flags override its keys");
    est->add_flag("--center", ea.center, "Center all columns before estimation");
    est->add_flag("--header", ea.header, "Input CSVs have a header row");
    est->add_flag("--exact", ea.exact, "Exact inverses (requires n > q >= p)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the Gaussian IV design");
    sim->add_option("--rho", sa.rho, "Endogeneity correlation (repeatable)")->take_all();
    sim->add_option("--alpha1", sa.alpha1, "First-stage strength (repeatable)")->take_all();
    sim->add_option("--n", sa.n, "Sample size");
    sim->add_option("--p", sa.p, "Number of covariates");
    sim->add_option("--q", sa.q, "Number of instruments");
    sim->add_option("--reps", sa.reps, "Replications per cell");
    sim->add_option("--seed", sa.seed, "Master seed");
    sim->add_option("--level", sa.level, "Confidence level");
    sim->add_option("--tuning", sa.tuning, "per-rep | once | fixed");
    sim->add_option("--folds", sa.folds, "Cross-validation folds");
    sim->add_option("--lambda", sa.lambda, "IV Lasso penalty (fixed tuning)");
    sim->add_option("--lambda-node", sa.lambda_node, "Nodewise penalty (fixed tuning)");
    sim->add_option("--lambda-node-m", sa.lambda_node_m, "Structural nodewise penalty (fixed tuning)");
    sim->add_option("--c0", sa.c0, "Threshold constant");
    sim->add_option("--lambda0", sa.lambda0, "Scaled Lasso penalty");
    sim->add_option("--out", sa.out, "Output directory");
    sim->add_option("--threads", sa.threads, "Worker threads (0 = all; env HDIV_THREADS)");
    sim->add_option("--config", sa.config, "JSON config; flags override its keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (est->parsed()) return run_estimate(*est, ea, out);
        return run_simulate(*sim, sa, out);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (est->parsed() && std::string(e.what()).rfind("missing required option", 0) == 0) {
            err << est->help();
        }
        return 2;
    } catch (const std::exception& e) {
        err << "internal failure: " << e.what() << "\n";
        return 3;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("hdiv");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hdiv::cli
