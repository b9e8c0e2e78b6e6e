#include "epimi/bootstrap.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <sstream>

namespace epimi {

namespace {

constexpr double kSeparationNorm = 1e6;
constexpr int kMaxHalvings = 30;

ParameterVector newton_mle(const ModelSpec& spec, const LabeledDataset& data,
                           const Eigen::VectorXd& w, const TrainingConfig& config,
                           const ParameterVector& init) {
    const int p = spec.param_count();
    // Stationarity is declared relative to the total weight so that scaling
    // all weights by a constant does not change the fitted optimum.
    const double tol = config.gradient_tolerance * std::max(1.0, w.sum());

    ParameterVector theta = init;
    double objective = weighted_log_likelihood(spec, theta, data, w);

    for (int it = 0; it < config.max_iterations; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (w[i] == 0.0) continue;
            const Eigen::VectorXd x = data.features.row(i);
            g += w[i] * score(spec, theta, x, data.labels[i]);
            h += w[i] * loglik_hessian(spec, theta, x, data.labels[i]);
        }
        if (g.lpNorm<Eigen::Infinity>() <= tol) return theta;

        // h is negative (semi)definite; solve h * step = g and walk against it.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::VectorXd step = -ldlt.solve(g);
        if (ldlt.info() != Eigen::Success || !step.allFinite())
            throw NumericalError("newton step failed: singular weighted information matrix");

        double lambda = 1.0;
        ParameterVector candidate = theta + step;
        double cand_obj = weighted_log_likelihood(spec, candidate, data, w);
        for (int half = 0; half < kMaxHalvings && !(cand_obj >= objective); ++half) {
            lambda *= 0.5;
            candidate = theta + lambda * step;
            cand_obj = weighted_log_likelihood(spec, candidate, data, w);
        }
        theta = candidate;
        objective = cand_obj;
        if (theta.lpNorm<Eigen::Infinity>() > kSeparationNorm)
            throw NumericalError("glm fit separated: parameter norm exceeded 1e6");
    }

    // Accept the final iterate only if it actually satisfies the rule.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (w[i] == 0.0) continue;
        const Eigen::VectorXd x = data.features.row(i);
        g += w[i] * score(spec, theta, x, data.labels[i]);
    }
    if (g.lpNorm<Eigen::Infinity>() <= tol) return theta;
    throw NumericalError("glm fit did not converge within max_iterations");
}

ParameterVector gradient_ascent_mle(const ModelSpec& spec, const LabeledDataset& data,
                                    const Eigen::VectorXd& w, const TrainingConfig& config,
                                    const ParameterVector& init) {
    const int p = spec.param_count();
    const double tol = config.gradient_tolerance * std::max(1.0, w.sum());
    ParameterVector theta = init;
    for (int it = 0; it < config.max_iterations; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (w[i] == 0.0) continue;
            const Eigen::VectorXd x = data.features.row(i);
            g += w[i] * score(spec, theta, x, data.labels[i]);
        }
        if (g.lpNorm<Eigen::Infinity>() <= tol) return theta;
        theta += config.step_size * g;
        if (!theta.allFinite())
            throw NumericalError("gradient ascent diverged (non-finite parameter)");
        if (theta.lpNorm<Eigen::Infinity>() > kSeparationNorm)
            throw NumericalError("glm fit separated: parameter norm exceeded 1e6");
    }
    // Gradient ascent runs on a fixed iteration budget; unlike Newton it does
    // not promise stationarity, so hitting the cap is not an error.
    return theta;
}

}  // namespace

WeightVector sample_dirichlet_weights(Eigen::Index n, RngStream& rng) {
    if (n < 1) throw ValidationError("weight draw needs n >= 1");
    WeightVector w;
    w.scheme = WeightScheme::Dirichlet;
    w.weights.resize(n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        w.weights[i] = rng.exponential();
        sum += w.weights[i];
    }
    // Exp(1) draws are strictly positive with probability one, but normalize
    // defensively in case of an exact zero from the uniform grid.
    if (sum <= 0.0) throw NumericalError("dirichlet draw collapsed to zero mass");
    for (Eigen::Index i = 0; i < n; ++i) {
        w.weights[i] /= sum;
        if (w.weights[i] <= 0.0) w.weights[i] = std::numeric_limits<double>::min();
    }
    return w;
}

WeightVector sample_multinomial_weights(Eigen::Index n, RngStream& rng) {
    if (n < 1) throw ValidationError("weight draw needs n >= 1");
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
    for (Eigen::Index draw = 0; draw < n; ++draw)
        counts[static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(n)))] += 1.0;
    WeightVector w;
    w.scheme = WeightScheme::Multinomial;
    w.weights = counts / static_cast<double>(n);
    return w;
}

ParameterVector fit_weighted_mle(const ModelSpec& spec, const LabeledDataset& data,
                                 const WeightVector& xi, const TrainingConfig& config,
                                 RngStream seed, const ParameterVector* warm_start) {
    spec.validate();
    config.validate();
    data.validate();
    xi.validate();
    if (xi.size() != data.n()) throw ValidationError("weight vector/dataset size mismatch");
    if (data.class_count != spec.class_count)
        throw ValidationError("dataset/model class count mismatch");
    if (data.dim() != spec.input_dim)
        throw ValidationError("dataset/model feature dimension mismatch");

    if (spec.kind == ModelKind::Mlp) return train_mlp(spec, data, xi.weights, config, seed);

    ParameterVector init = ParameterVector::Zero(spec.param_count());
    if (warm_start != nullptr) {
        check_parameters(spec, *warm_start);
        init = *warm_start;
    }
    return config.optimizer == OptimizerKind::Newton
               ? newton_mle(spec, data, xi.weights, config, init)
               : gradient_ascent_mle(spec, data, xi.weights, config, init);
}

BootstrapEnsemble build_bootstrap_ensemble(const ModelSpec& spec, const LabeledDataset& data,
                                           int replicates, WeightScheme scheme,
                                           const TrainingConfig& config,
                                           std::uint64_t master_seed, int threads) {
    spec.validate();
    config.validate();
    data.validate();
    if (replicates < 1) throw ValidationError("bootstrap needs at least one replicate");

    // GLM replicates start from the full-data MLE: resampled optima are
    // nearby, so Newton converges in a couple of steps.
    std::optional<ParameterVector> warm;
    if (config.warm_start_glm && spec.kind != ModelKind::Mlp)
        warm = fit_weighted_mle(spec, data, WeightVector::uniform(data.n()), config,
                                RngStream(master_seed, 0));

    BootstrapEnsemble out;
    out.spec = spec;
    out.scheme = scheme;
    out.master_seed = master_seed;
    out.requested = replicates;

    std::vector<std::optional<ParameterVector>> fits(replicates);
    std::vector<std::optional<WeightVector>> draws(replicates);
    std::vector<int> failed_flags(replicates, 0);

    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t idx) {
        const std::uint64_t b = static_cast<std::uint64_t>(idx) + 1;  // replicate ids are 1-based
        auto attempt = [&](std::uint64_t base) {
            RngStream wstream(master_seed, base + b);
            WeightVector xi = scheme == WeightScheme::Dirichlet
                                  ? sample_dirichlet_weights(data.n(), wstream)
                                  : sample_multinomial_weights(data.n(), wstream);
            RngStream tstream(master_seed, base + kTrainingSeedBase + b);
            ParameterVector theta = fit_weighted_mle(spec, data, xi, config, tstream,
                                                     warm ? &*warm : nullptr);
            fits[idx] = std::move(theta);
            draws[idx] = std::move(xi);
        };
        try {
            attempt(0);
        } catch (const NumericalError&) {
            try {
                attempt(kRetryBase);  // one retry on fresh substreams
            } catch (const NumericalError&) {
                failed_flags[idx] = 1;
            }
        }
    });

    for (int idx = 0; idx < replicates; ++idx) {
        if (failed_flags[idx]) {
            out.failed_replicates.push_back(idx + 1);
            continue;
        }
        out.members.push_back(std::move(*fits[idx]));
        out.weight_draws.push_back(std::move(*draws[idx]));
    }

    if (10 * static_cast<int>(out.failed_replicates.size()) > replicates) {
        std::ostringstream msg;
        msg << "bootstrap ensemble unusable: " << out.failed_replicates.size() << " of "
            << replicates << " replicates failed (more than 10%)";
        throw NumericalError(msg.str());
    }
    return out;
}

PredictionMatrix ensemble_predictions(const BootstrapEnsemble& ensemble,
                                      const Eigen::VectorXd& x_test) {
    return member_predictions(ensemble.spec, ensemble.members, x_test);
}

PredictionMatrix member_predictions(const ModelSpec& spec,
                                    const std::vector<ParameterVector>& members,
                                    const Eigen::VectorXd& x_test) {
    if (members.empty()) throw ValidationError("ensemble has no members");
    std::vector<ProbabilityVector> rows;
    rows.reserve(members.size());
    for (const ParameterVector& theta : members) rows.push_back(predict_proba(spec, theta, x_test));
    return PredictionMatrix(std::move(rows));
}

SeedGridEnsemble build_seed_grid(const ModelSpec& spec, const LabeledDataset& data,
                                 int dataset_count, int seed_count, WeightScheme scheme,
                                 const TrainingConfig& config, std::uint64_t master_seed,
                                 int threads) {
    spec.validate();
    config.validate();
    data.validate();
    if (dataset_count < 1 || seed_count < 1)
        throw ValidationError("seed grid needs dataset_count >= 1 and seed_count >= 1");

    SeedGridEnsemble grid;
    grid.spec = spec;
    grid.dataset_count = dataset_count;
    grid.seed_count = seed_count;
    grid.master_seed = master_seed;

    grid.weight_draws.reserve(dataset_count);
    for (int b = 1; b <= dataset_count; ++b) {
        RngStream wstream(master_seed, static_cast<std::uint64_t>(b));
        grid.weight_draws.push_back(scheme == WeightScheme::Dirichlet
                                        ? sample_dirichlet_weights(data.n(), wstream)
                                        : sample_multinomial_weights(data.n(), wstream));
    }

    std::optional<ParameterVector> warm;
    if (config.warm_start_glm && spec.kind != ModelKind::Mlp)
        warm = fit_weighted_mle(spec, data, WeightVector::uniform(data.n()), config,
                                RngStream(master_seed, 0));

    const std::size_t cells = static_cast<std::size_t>(dataset_count) * seed_count;
    grid.members.resize(cells);
    parallel_for(cells, threads, [&](std::size_t idx) {
        const int b = static_cast<int>(idx) / seed_count;      // 0-based dataset index
        const int s = static_cast<int>(idx) % seed_count + 1;  // 1-based seed id
        RngStream tstream(master_seed, kTrainingSeedBase + static_cast<std::uint64_t>(s));
        grid.members[idx] = fit_weighted_mle(spec, data, grid.weight_draws[b], config, tstream,
                                             warm ? &*warm : nullptr);
    });
    return grid;
}

std::vector<ParameterVector> build_deep_ensemble(const ModelSpec& spec,
                                                 const LabeledDataset& data, int seed_count,
                                                 const TrainingConfig& config,
                                                 std::uint64_t master_seed, int threads) {
    spec.validate();
    config.validate();
    data.validate();
    if (seed_count < 1) throw ValidationError("deep ensemble needs seed_count >= 1");
    const WeightVector uniform = WeightVector::uniform(data.n());
    std::vector<ParameterVector> members(seed_count);
    parallel_for(static_cast<std::size_t>(seed_count), threads, [&](std::size_t idx) {
        const std::uint64_t s = static_cast<std::uint64_t>(idx) + 1;
        RngStream tstream(master_seed, kTrainingSeedBase + s);
        members[idx] = fit_weighted_mle(spec, data, uniform, config, tstream, nullptr);
    });
    return members;
}

}  // namespace epimi
