#include "epimi/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "epimi/active.hpp"
#include "epimi/asymptotic.hpp"
#include "epimi/attribution.hpp"
#include "epimi/bootstrap.hpp"
#include "epimi/core.hpp"
#include "epimi/information.hpp"
#include "epimi/io.hpp"
#include "epimi/models.hpp"
#include "epimi/posterior.hpp"
#include "epimi/rng.hpp"
#include "epimi/simulate.hpp"

namespace epimi {

namespace {

// Sub-master derivation tags: each stochastic component of a run gets its own
// 64-bit master so streams never collide across components.
using seed_tag::kData;
using seed_tag::kBootstrap;
using seed_tag::kMcmc;
using seed_tag::kFisher;
using seed_tag::kActive;
using seed_tag::kInfluence;
// Per-n sweeps index off these bases.
using seed_tag::kSweepData;
using seed_tag::kSweepBootstrap;
using seed_tag::kSweepMcmc;

struct Envelope {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // Set when a command failed midway but produced a meaningful partial
    // result that should still be persisted (exit code stays nonzero).
    std::optional<std::string> numerical_failure;
};

ModelSpec spec_from_config(const RunConfig& cfg, int input_dim, int class_count) {
    ModelSpec spec;
    spec.kind = parse_model_kind(cfg.model);
    spec.input_dim = input_dim;
    spec.class_count = class_count;
    spec.hidden_layers = cfg.hidden;
    if (spec.kind == ModelKind::BinaryLogistic && class_count != 2)
        throw ValidationError("binary-logistic cannot model " + std::to_string(class_count) +
                              " classes; pick --model softmax or mlp");
    spec.validate();
    return spec;
}

TrainingConfig training_from_config(const RunConfig& cfg) {
    TrainingConfig t;
    if (cfg.optimizer == "newton")
        t.optimizer = OptimizerKind::Newton;
    else if (cfg.optimizer == "gradient-descent")
        t.optimizer = OptimizerKind::GradientDescent;
    else
        throw ValidationError("unknown optimizer '" + cfg.optimizer +
                              "' (newton|gradient-descent)");
    t.max_iterations = cfg.max_iterations;
    t.step_size = cfg.step_size;
    t.mlp_epochs = cfg.epochs;
    t.init_scale = cfg.init_scale;
    t.validate();
    return t;
}

McmcConfig mcmc_from_config(const RunConfig& cfg) {
    McmcConfig m;
    m.total_steps = cfg.mcmc_steps;
    m.burn_in = cfg.mcmc_burn_in;
    m.thinning = cfg.mcmc_thinning;
    return m;
}

std::vector<double> default_grid(double lo, double hi, double step) {
    std::vector<double> xs;
    const long count = std::lround((hi - lo) / step);
    for (long i = 0; i <= count; ++i) xs.push_back(lo + step * static_cast<double>(i));
    return xs;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << kToolName << ": warning: " << w << "\n";
}

// Parse both dataset files and insist they describe the same problem.
std::pair<LabeledDataset, LabeledDataset> load_train_test(const RunConfig& cfg) {
    if (cfg.train_csv.empty() || cfg.test_csv.empty())
        throw ValidationError("this command needs TRAIN_CSV and TEST_CSV arguments");
    std::vector<std::string> warnings;
    LabeledDataset train = parse_dataset_csv(cfg.train_csv, &warnings);
    LabeledDataset test = parse_dataset_csv(cfg.test_csv, &warnings);
    print_warnings(warnings);
    if (train.dim() != test.dim())
        throw ValidationError("train/test feature dimensions differ (" +
                              std::to_string(train.dim()) + " vs " + std::to_string(test.dim()) +
                              ")");
    if (train.class_count != test.class_count)
        throw ValidationError(
            "train/test class counts differ (" + std::to_string(train.class_count) + " vs " +
            std::to_string(test.class_count) + "); ensure both files cover the same classes");
    return {std::move(train), std::move(test)};
}

nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    j["model"] = cfg.model;
    j["bootstrap"] = cfg.bootstrap;
    j["seeds"] = cfg.seeds;
    j["weights"] = cfg.weights;
    j["n_grid"] = cfg.n_grid;
    j["mcmc_steps"] = cfg.mcmc_steps;
    j["mcmc_burn_in"] = cfg.mcmc_burn_in;
    j["mcmc_thinning"] = cfg.mcmc_thinning;
    j["damping"] = cfg.damping;
    j["budget"] = cfg.budget;
    j["out"] = cfg.out;
    j["threads"] = cfg.threads;
    j["hidden"] = cfg.hidden;
    j["optimizer"] = cfg.optimizer;
    j["max_iterations"] = cfg.max_iterations;
    j["step_size"] = cfg.step_size;
    j["epochs"] = cfg.epochs;
    j["init_scale"] = cfg.init_scale;
    j["trailing_layers"] = cfg.trailing_layers;
    j["train_n"] = cfg.train_n;
    j["theta0_intercept"] = cfg.theta0_intercept;
    j["theta0_slope"] = cfg.theta0_slope;
    j["x_grid"] = cfg.x_grid;
    j["fisher_draws"] = cfg.fisher_draws;
    j["scorer"] = cfg.scorer;
    j["classes"] = cfg.classes;
    j["pool_size"] = cfg.pool_size;
    j["test_size"] = cfg.test_size;
    j["init_per_class"] = cfg.init_per_class;
    j["mixture_radius"] = cfg.mixture_radius;
    j["mixture_noise"] = cfg.mixture_noise;
    j["train_csv"] = cfg.train_csv;
    j["test_csv"] = cfg.test_csv;
    return j;
}

// ---------------------------------------------------------------------------
// Commands.

Envelope cmd_teaser(const RunConfig& cfg) {
    if (parse_model_kind(cfg.model) != ModelKind::BinaryLogistic)
        throw ValidationError("the teaser benchmark is defined for --model binary-logistic");
    const Eigen::Vector2d theta0(cfg.theta0_intercept, cfg.theta0_slope);
    ModelSpec spec = spec_from_config(cfg, 1, 2);
    const TrainingConfig training = training_from_config(cfg);

    RngStream data_rng(derive_submaster(cfg.seed, kData), 0);
    const LabeledDataset data = make_logistic_data(cfg.train_n, theta0, data_rng);

    const BootstrapEnsemble ensemble =
        build_bootstrap_ensemble(spec, data, cfg.bootstrap, parse_weight_scheme(cfg.weights),
                                 training, derive_submaster(cfg.seed, kBootstrap), cfg.threads);

    const ParameterVector mle =
        fit_weighted_mle(spec, data, WeightVector::uniform(data.n()), training, RngStream(0, 0));
    const PriorSpec prior = PriorSpec::standard_normal(2);
    const McmcChain chain = metropolis_sample(
        [&](const ParameterVector& th) { return log_posterior(spec, prior, data, th); }, mle,
        mcmc_from_config(cfg), RngStream(derive_submaster(cfg.seed, kMcmc), 0));

    RngStream fisher_rng(derive_submaster(cfg.seed, kFisher), 0);
    const Eigen::MatrixXd fisher_features =
        sample_standard_normal_matrix(cfg.fisher_draws, 1, fisher_rng);
    const FisherInformation fisher =
        fisher_information(spec, theta0, fisher_features, FisherMode::Analytic);

    const std::vector<double> xs =
        cfg.x_grid.empty() ? default_grid(-3.0, 3.0, 0.25) : cfg.x_grid;

    Envelope env;
    env.header = {"x", "mi_bootstrap", "mi_mcmc", "mi_first_order", "mi_variance_ratio"};
    for (double x : xs) {
        const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
        const PredictionMatrix preds = ensemble_predictions(ensemble, xv);
        const double mi_boot = mutual_information(preds).mi;
        const double mi_mcmc = bayesian_mi(chain, spec, xv).mi;
        const DeltaVariances dv = delta_variances(prediction_gradient(spec, theta0, xv), fisher);
        const double mi_fo = first_order_mi(dv, predict_proba(spec, theta0, xv), cfg.train_n);
        env.rows.push_back({format_double(x), format_double(mi_boot), format_double(mi_mcmc),
                            format_double(mi_fo), format_double(variance_ratio_mi(preds))});
    }
    return env;
}

Envelope cmd_estimate(const RunConfig& cfg) {
    auto [train, test] = load_train_test(cfg);
    ModelSpec spec = spec_from_config(cfg, static_cast<int>(train.dim()), train.class_count);
    const TrainingConfig training = training_from_config(cfg);

    const BootstrapEnsemble ensemble =
        build_bootstrap_ensemble(spec, train, cfg.bootstrap, parse_weight_scheme(cfg.weights),
                                 training, derive_submaster(cfg.seed, kBootstrap), cfg.threads);

    Envelope env;
    env.header = {"row", "label", "mi", "total_entropy", "mean_entropy", "true_class_spread"};
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const PredictionMatrix preds = ensemble_predictions(ensemble, test.features.row(i));
        const MiEstimate est = mutual_information(preds);
        env.rows.push_back({std::to_string(i), std::to_string(test.labels[i]),
                            format_double(est.mi), format_double(est.total_entropy),
                            format_double(est.mean_entropy),
                            format_double(true_class_spread(preds, test.labels[i]))});
    }
    return env;
}

Envelope cmd_decompose(const RunConfig& cfg) {
    auto [train, test] = load_train_test(cfg);
    ModelSpec spec = spec_from_config(cfg, static_cast<int>(train.dim()), train.class_count);
    const TrainingConfig training = training_from_config(cfg);
    const std::uint64_t master = derive_submaster(cfg.seed, kBootstrap);

    const SeedGridEnsemble grid =
        build_seed_grid(spec, train, cfg.bootstrap, cfg.seeds, parse_weight_scheme(cfg.weights),
                        training, master, cfg.threads);
    const std::vector<ParameterVector> deep =
        build_deep_ensemble(spec, train, cfg.seeds, training, master, cfg.threads);

    Envelope env;
    env.header = {"row", "label", "mi_total", "mi_resampling", "mi_seeds", "mi_deep_ensemble"};
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const Eigen::VectorXd x = test.features.row(i);
        PredictionGrid cells;
        cells.dataset_count = grid.dataset_count;
        cells.seed_count = grid.seed_count;
        cells.cells.reserve(grid.members.size());
        for (const ParameterVector& theta : grid.members)
            cells.cells.push_back(predict_proba(spec, theta, x));
        const MiDecomposition dec = decompose_mi(cells);
        const double deep_mi = deep_ensemble_mi(member_predictions(spec, deep, x)).mi;
        env.rows.push_back({std::to_string(i), std::to_string(test.labels[i]),
                            format_double(dec.total.mi), format_double(dec.resampling),
                            format_double(dec.seeds), format_double(deep_mi)});
    }
    return env;
}

Envelope cmd_asymptotic(const RunConfig& cfg) {
    if (parse_model_kind(cfg.model) != ModelKind::BinaryLogistic)
        throw ValidationError("the asymptotic sweep is defined for --model binary-logistic");
    const Eigen::Vector2d theta0(cfg.theta0_intercept, cfg.theta0_slope);
    ModelSpec spec = spec_from_config(cfg, 1, 2);
    const TrainingConfig training = training_from_config(cfg);
    const PriorSpec prior = PriorSpec::standard_normal(2);

    RngStream fisher_rng(derive_submaster(cfg.seed, kFisher), 0);
    const FisherInformation fisher = fisher_information(
        spec, theta0, sample_standard_normal_matrix(cfg.fisher_draws, 1, fisher_rng),
        FisherMode::Analytic);

    const std::vector<double> xs =
        cfg.x_grid.empty() ? std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0} : cfg.x_grid;

    Envelope env;
    env.header = {"n",           "x",          "mi_bootstrap",   "mi_mcmc",
                  "mi_first_order", "n_mi_bootstrap", "n_mi_mcmc", "n_mi_first_order"};
    for (std::size_t idx = 0; idx < cfg.n_grid.size(); ++idx) {
        const long n = cfg.n_grid[idx];
        if (n < 2) throw ValidationError("--n-grid entries must be >= 2");
        RngStream data_rng(derive_submaster(cfg.seed, kSweepData + idx), 0);
        const LabeledDataset data = make_logistic_data(n, theta0, data_rng);

        const BootstrapEnsemble ensemble = build_bootstrap_ensemble(
            spec, data, cfg.bootstrap, parse_weight_scheme(cfg.weights), training,
            derive_submaster(cfg.seed, kSweepBootstrap + idx), cfg.threads);
        const ParameterVector mle = fit_weighted_mle(spec, data, WeightVector::uniform(data.n()),
                                                     training, RngStream(0, 0));
        const McmcChain chain = metropolis_sample(
            [&](const ParameterVector& th) { return log_posterior(spec, prior, data, th); }, mle,
            mcmc_from_config(cfg), RngStream(derive_submaster(cfg.seed, kSweepMcmc + idx), 0));

        const double nd = static_cast<double>(n);
        for (double x : xs) {
            const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
            const double mi_boot = mutual_information(ensemble_predictions(ensemble, xv)).mi;
            const double mi_mcmc = bayesian_mi(chain, spec, xv).mi;
            const DeltaVariances dv =
                delta_variances(prediction_gradient(spec, theta0, xv), fisher);
            const double mi_fo = first_order_mi(dv, predict_proba(spec, theta0, xv), n);
            env.rows.push_back({std::to_string(n), format_double(x), format_double(mi_boot),
                                format_double(mi_mcmc), format_double(mi_fo),
                                format_double(nd * mi_boot), format_double(nd * mi_mcmc),
                                format_double(nd * mi_fo)});
        }
    }
    return env;
}

Envelope cmd_active(const RunConfig& cfg) {
    const int k_count = cfg.classes;
    if (k_count < 2) throw ValidationError("--classes must be >= 2");
    if (cfg.init_per_class < 1) throw ValidationError("--init-per-class must be >= 1");

    RngStream data_rng(derive_submaster(cfg.seed, kData), 0);
    LabeledDataset labeled = make_gaussian_mixture(cfg.init_per_class * k_count, k_count,
                                                   cfg.mixture_radius, cfg.mixture_noise, data_rng);
    LabeledDataset pool = make_gaussian_mixture(cfg.pool_size, k_count, cfg.mixture_radius,
                                                cfg.mixture_noise, data_rng);
    LabeledDataset test = make_gaussian_mixture(cfg.test_size, k_count, cfg.mixture_radius,
                                                cfg.mixture_noise, data_rng);
    const PoolState initial = PoolState::make(std::move(labeled), std::move(pool), std::move(test));

    AcquisitionConfig acq;
    acq.scorer = parse_scorer_kind(cfg.scorer);
    acq.ensemble_size = acq.scorer == ScorerKind::EnsembleMi ? cfg.seeds : cfg.bootstrap;
    acq.budget = cfg.budget;
    acq.model = spec_from_config(cfg, 2, k_count);
    acq.training = training_from_config(cfg);
    acq.scheme = parse_weight_scheme(cfg.weights);
    acq.master_seed = derive_submaster(cfg.seed, kActive);
    acq.threads = cfg.threads;

    // The random baseline always runs alongside the configured scorer so every
    // record file carries its own control curve.
    std::vector<ScorerKind> arms{acq.scorer};
    if (acq.scorer != ScorerKind::Random) arms.push_back(ScorerKind::Random);

    Envelope env;
    env.header = {"step", "n_labeled", "accuracy", "scorer", "seed"};
    const std::string seed_text = std::to_string(cfg.seed);
    for (ScorerKind arm : arms) {
        AcquisitionConfig arm_cfg = acq;
        arm_cfg.scorer = arm;
        std::vector<AccuracyPoint> curve;
        try {
            curve = run_active_learning(initial, arm_cfg);
        } catch (const ActiveLearningError& err) {
            // Persist whatever the loop produced, then report the failure.
            for (const AccuracyPoint& pt : err.partial_curve)
                env.rows.push_back({std::to_string(pt.step), std::to_string(pt.n_labeled),
                                    format_double(pt.accuracy), pt.scorer, seed_text});
            env.numerical_failure = err.what();
            return env;
        }
        for (const AccuracyPoint& pt : curve)
            env.rows.push_back({std::to_string(pt.step), std::to_string(pt.n_labeled),
                                format_double(pt.accuracy), pt.scorer, seed_text});
    }
    return env;
}

Envelope cmd_influence(const RunConfig& cfg) {
    auto [train, test] = load_train_test(cfg);
    ModelSpec spec = spec_from_config(cfg, static_cast<int>(train.dim()), train.class_count);
    const TrainingConfig training = training_from_config(cfg);
    const WeightScheme scheme = parse_weight_scheme(cfg.weights);

    InfluenceConfig icfg;
    icfg.damping = cfg.damping;
    icfg.trailing_layers = cfg.trailing_layers;
    const InfluenceCache cache =
        build_influence_cache(spec, train, training, icfg,
                              RngStream(derive_submaster(cfg.seed, kInfluence),
                                        kTrainingSeedBase));

    // Same weight-draw master for the linearized and the refitted ensembles,
    // so replicate b uses identical weights in both columns.
    const std::uint64_t draw_master = derive_submaster(cfg.seed, kBootstrap);
    const BootstrapEnsemble refit = build_bootstrap_ensemble(
        spec, train, cfg.bootstrap, scheme, training, draw_master, cfg.threads);

    Envelope env;
    env.header = {"row", "label", "mi_if", "mi_bootstrap"};
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const Eigen::VectorXd x = test.features.row(i);
        const double mi_if = if_bootstrap_mi(cache, x, cfg.bootstrap, scheme, draw_master).mi;
        const double mi_boot = mutual_information(ensemble_predictions(refit, x)).mi;
        env.rows.push_back({std::to_string(i), std::to_string(test.labels[i]),
                            format_double(mi_if), format_double(mi_boot)});
    }
    return env;
}

}  // namespace

int run_command(const RunConfig& config) {
    RunConfig cfg = config;
    if (cfg.out.empty()) cfg.out = cfg.command + ".csv";

    const auto start = std::chrono::steady_clock::now();
    Envelope env;
    if (cfg.command == "teaser")
        env = cmd_teaser(cfg);
    else if (cfg.command == "estimate")
        env = cmd_estimate(cfg);
    else if (cfg.command == "decompose")
        env = cmd_decompose(cfg);
    else if (cfg.command == "asymptotic")
        env = cmd_asymptotic(cfg);
    else if (cfg.command == "active")
        env = cmd_active(cfg);
    else if (cfg.command == "influence")
        env = cmd_influence(cfg);
    else
        throw ValidationError("unknown command '" + cfg.command + "'");
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;

    write_csv_atomic(cfg.out, env.header, env.rows);
    nlohmann::json meta;
    meta["tool"] = kToolName;
    meta["version"] = kToolVersion;
    meta["config"] = config_json(cfg);
    meta["rows"] = env.rows.size();
    meta["wall_seconds"] = wall.count();
    if (env.numerical_failure) meta["numerical_failure"] = *env.numerical_failure;
    write_text_atomic(cfg.out + ".meta.json", meta.dump(2) + "\n");

    if (env.numerical_failure) {
        std::cerr << kToolName << ": numerical error: " << *env.numerical_failure
                  << " (partial records kept)\n";
        return 3;
    }
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"bootstrap ensembles as a practical estimator of epistemic uncertainty"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.set_config("--config")->description("key=value file; flags override it");
    app.require_subcommand(1);

    app.add_option("--seed", cfg.seed, "master seed; all randomness derives from it")
        ->capture_default_str();
    app.add_option("--model", cfg.model, "binary-logistic|softmax|mlp")->capture_default_str();
    app.add_option("--bootstrap,-b", cfg.bootstrap, "bootstrap replicates B")
        ->capture_default_str();
    app.add_option("--seeds", cfg.seeds, "training-seed models S")->capture_default_str();
    app.add_option("--weights", cfg.weights, "dirichlet|multinomial")->capture_default_str();
    app.add_option("--n-grid", cfg.n_grid, "training sizes for the asymptotic sweep")
        ->capture_default_str();
    app.add_option("--mcmc-steps", cfg.mcmc_steps, "total Metropolis steps")
        ->capture_default_str();
    app.add_option("--mcmc-burn-in", cfg.mcmc_burn_in, "burn-in steps")->capture_default_str();
    app.add_option("--mcmc-thinning", cfg.mcmc_thinning, "keep every k-th sample")
        ->capture_default_str();
    app.add_option("--damping", cfg.damping, "influence-function Hessian damping")
        ->capture_default_str();
    app.add_option("--budget", cfg.budget, "active-learning acquisitions")
        ->capture_default_str();
    app.add_option("--out", cfg.out, "record CSV path (default <command>.csv)");
    app.add_option("--threads", cfg.threads, "worker threads (results identical for any value)")
        ->capture_default_str();
    app.add_option("--hidden", cfg.hidden, "mlp hidden layer widths")->capture_default_str();
    app.add_option("--optimizer", cfg.optimizer, "newton|gradient-descent")
        ->capture_default_str();
    app.add_option("--max-iterations", cfg.max_iterations, "GLM optimizer iteration cap")
        ->capture_default_str();
    app.add_option("--step-size", cfg.step_size, "gradient step size")->capture_default_str();
    app.add_option("--epochs", cfg.epochs, "mlp training epochs")->capture_default_str();
    app.add_option("--init-scale", cfg.init_scale, "mlp init stddev scale")
        ->capture_default_str();
    app.add_option("--trailing-layers", cfg.trailing_layers,
                   "mlp layers covered by influence functions")
        ->capture_default_str();
    app.add_option("--train-n", cfg.train_n, "synthetic training-set size")
        ->capture_default_str();
    app.add_option("--theta0-intercept", cfg.theta0_intercept, "true intercept")
        ->capture_default_str();
    app.add_option("--theta0-slope", cfg.theta0_slope, "true slope")->capture_default_str();
    app.add_option("--x-grid", cfg.x_grid, "test inputs for synthetic benchmarks");
    app.add_option("--fisher-draws", cfg.fisher_draws, "feature draws for the information matrix")
        ->capture_default_str();
    app.add_option("--scorer", cfg.scorer, "bootstrap-mi|ensemble-mi|random")
        ->capture_default_str();
    app.add_option("--classes", cfg.classes, "mixture classes")->capture_default_str();
    app.add_option("--pool-size", cfg.pool_size, "unlabeled pool size")->capture_default_str();
    app.add_option("--test-size", cfg.test_size, "held-out test size")->capture_default_str();
    app.add_option("--init-per-class", cfg.init_per_class, "initial labeled points per class")
        ->capture_default_str();
    app.add_option("--radius", cfg.mixture_radius, "mixture mean circle radius")
        ->capture_default_str();
    app.add_option("--noise-sd", cfg.mixture_noise, "mixture noise stddev")
        ->capture_default_str();

    CLI::App* teaser = app.add_subcommand("teaser", "1-d logistic benchmark, four estimators");
    CLI::App* estimate =
        app.add_subcommand("estimate", "bootstrap mutual information on CSV datasets");
    CLI::App* decompose =
        app.add_subcommand("decompose", "split ensemble spread into resampling and seed parts");
    CLI::App* asymptotic =
        app.add_subcommand("asymptotic", "n-scaling sweep against the first-order law");
    CLI::App* active = app.add_subcommand("active", "pool-based acquisition benchmark");
    CLI::App* influence =
        app.add_subcommand("influence", "linearized vs refitted bootstrap estimates");
    for (CLI::App* sub : {teaser, estimate, decompose, asymptotic, active, influence})
        sub->fallthrough();
    for (CLI::App* sub : {estimate, decompose, influence}) {
        sub->add_option("train_csv", cfg.train_csv, "training dataset")->required();
        sub->add_option("test_csv", cfg.test_csv, "evaluation dataset")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();

        // Command-sensitive defaults, applied only when the user did not pick
        // a value: the acquisition benchmark wants a small ensemble, a
        // gradient learner that cannot hit separation errors on tiny labeled
        // sets, and a multiclass-capable model; the influence command pairs
        // naturally with multinomial draws.
        if (cfg.command == "active") {
            if (app.count("--model") == 0 && cfg.classes != 2) cfg.model = "softmax";
            if (app.count("--optimizer") == 0) cfg.optimizer = "gradient-descent";
            if (app.count("--bootstrap") == 0) cfg.bootstrap = 5;
        }
        if (cfg.command == "influence" && app.count("--weights") == 0)
            cfg.weights = "multinomial";

        return run_command(cfg);
    } catch (const ValidationError& e) {
        std::cerr << kToolName << ": validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << kToolName << ": numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << kToolName << ": internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace epimi
