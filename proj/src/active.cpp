#include "epimi/active.hpp"

#include <algorithm>
#include <set>

#include "epimi/information.hpp"

namespace epimi {

namespace {

// Fresh 64-bit master seed for one acquisition step; every stochastic element
// of the step (weight draws, training seeds, tie-free random scores) derives
// from it, so a run is a pure function of (config, initial state).
std::uint64_t step_master(const AcquisitionConfig& config, int step) {
    return derive_submaster(config.master_seed, (1ull << 40) + static_cast<std::uint64_t>(step));
}

bool single_class(const LabeledDataset& data) {
    for (Eigen::Index i = 1; i < data.n(); ++i)
        if (data.labels[i] != data.labels[0]) return false;
    return true;
}

ParameterVector fit_current(const PoolState& state, const AcquisitionConfig& config, int step) {
    RngStream train_stream(step_master(config, step), kTrainingSeedBase);
    return fit_weighted_mle(config.model, state.labeled, WeightVector::uniform(state.labeled.n()),
                            config.training, train_stream);
}

void append_row(LabeledDataset& data, const Eigen::VectorXd& x, int label) {
    data.features.conservativeResize(data.features.rows() + 1, Eigen::NoChange);
    data.features.row(data.features.rows() - 1) = x.transpose();
    data.labels.conservativeResize(data.labels.size() + 1);
    data.labels[data.labels.size() - 1] = label;
}

void drop_row(LabeledDataset& data, Eigen::Index row) {
    const Eigen::Index n = data.features.rows();
    for (Eigen::Index i = row; i + 1 < n; ++i) {
        data.features.row(i) = data.features.row(i + 1);
        data.labels[i] = data.labels[i + 1];
    }
    data.features.conservativeResize(n - 1, Eigen::NoChange);
    data.labels.conservativeResize(n - 1);
}

}  // namespace

const char* scorer_kind_name(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::BootstrapMi:
            return "bootstrap-mi";
        case ScorerKind::EnsembleMi:
            return "ensemble-mi";
        case ScorerKind::Random:
            return "random";
    }
    return "?";
}

ScorerKind parse_scorer_kind(const std::string& name) {
    if (name == "bootstrap-mi") return ScorerKind::BootstrapMi;
    if (name == "ensemble-mi") return ScorerKind::EnsembleMi;
    if (name == "random") return ScorerKind::Random;
    throw ValidationError("unknown scorer '" + name + "' (bootstrap-mi|ensemble-mi|random)");
}

PoolState PoolState::make(LabeledDataset labeled, LabeledDataset pool, LabeledDataset test) {
    labeled.validate();
    pool.validate();
    test.validate();
    if (labeled.dim() != pool.dim() || labeled.dim() != test.dim())
        throw ValidationError("labeled/pool/test feature dimensions disagree");
    if (labeled.class_count != pool.class_count || labeled.class_count != test.class_count)
        throw ValidationError("labeled/pool/test class counts disagree");
    PoolState state;
    state.labeled = std::move(labeled);
    state.pool = std::move(pool);
    state.test = std::move(test);
    state.pool_original_index.resize(state.pool.n());
    for (Eigen::Index j = 0; j < state.pool.n(); ++j)
        state.pool_original_index[j] = static_cast<int>(j);
    return state;
}

void PoolState::validate() const {
    labeled.validate();
    test.validate();
    if (pool.n() != static_cast<Eigen::Index>(pool_original_index.size()))
        throw ValidationError("pool index bookkeeping out of sync");
    if (step != static_cast<int>(acquired.size()))
        throw ValidationError("step count does not match acquisitions");
    std::set<int> seen(acquired.begin(), acquired.end());
    if (seen.size() != acquired.size())
        throw ValidationError("acquired indices contain a duplicate");
    for (int original : pool_original_index)
        if (seen.count(original))
            throw ValidationError("pool still contains an acquired point");
}

void AcquisitionConfig::validate() const {
    model.validate();
    training.validate();
    if (ensemble_size < 2) throw ValidationError("acquisition needs ensemble_size >= 2");
    if (budget < 0) throw ValidationError("budget must be >= 0");
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

std::vector<double> scores_from_members(const ModelSpec& spec,
                                        const std::vector<ParameterVector>& members,
                                        const LabeledDataset& pool) {
    if (members.size() < 2) throw ValidationError("scoring needs at least 2 ensemble members");
    std::vector<double> scores(pool.n());
    for (Eigen::Index j = 0; j < pool.n(); ++j) {
        const Eigen::VectorXd x = pool.features.row(j);
        scores[j] = mutual_information(member_predictions(spec, members, x)).mi;
    }
    return scores;
}

PoolScores score_pool(const PoolState& state, const AcquisitionConfig& config) {
    state.validate();
    config.validate();
    if (state.pool.n() < 1) throw ValidationError("pool is empty; nothing to score");
    const std::uint64_t seed = step_master(config, state.step);

    PoolScores out;
    const bool degenerate = single_class(state.labeled);
    if (config.scorer == ScorerKind::Random || degenerate) {
        out.random_fallback = degenerate && config.scorer != ScorerKind::Random;
        RngStream rng(seed, 0);
        out.values.resize(state.pool.n());
        for (double& v : out.values) v = rng.uniform01();
        return out;
    }

    if (config.scorer == ScorerKind::BootstrapMi) {
        const BootstrapEnsemble ensemble =
            build_bootstrap_ensemble(config.model, state.labeled, config.ensemble_size,
                                     config.scheme, config.training, seed, config.threads);
        out.values = scores_from_members(config.model, ensemble.members, state.pool);
    } else {
        const std::vector<ParameterVector> members = build_deep_ensemble(
            config.model, state.labeled, config.ensemble_size, config.training, seed,
            config.threads);
        out.values = scores_from_members(config.model, members, state.pool);
    }
    return out;
}

int acquire_next(PoolState& state, const std::vector<double>& scores) {
    if (scores.size() != static_cast<std::size_t>(state.pool.n()))
        throw ValidationError("score vector does not match pool size");
    if (scores.empty()) throw ValidationError("cannot acquire from an empty pool");

    // Argmax, lowest index on exact ties.
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
        if (scores[j] > scores[best]) best = j;

    const Eigen::Index row = static_cast<Eigen::Index>(best);
    const int original = state.pool_original_index[best];
    append_row(state.labeled, state.pool.features.row(row), state.pool.labels[row]);
    drop_row(state.pool, row);
    state.pool_original_index.erase(state.pool_original_index.begin() + best);
    state.acquired.push_back(original);
    ++state.step;
    return original;
}

double model_accuracy(const ModelSpec& spec, const ParameterVector& theta,
                      const LabeledDataset& test) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < test.n(); ++i) {
        const ProbabilityVector p = predict_proba(spec, theta, test.features.row(i));
        std::size_t arg = 0;
        for (std::size_t k = 1; k < p.size(); ++k)
            if (p[k] > p[arg]) arg = k;
        if (static_cast<int>(arg) == test.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.n());
}

std::vector<AccuracyPoint> run_active_learning(PoolState state, const AcquisitionConfig& config) {
    state.validate();
    config.validate();
    if (state.step != 0) throw ValidationError("run_active_learning expects a fresh pool state");
    if (config.budget > state.pool.n())
        throw ValidationError("budget exceeds pool size");

    std::vector<AccuracyPoint> curve;
    auto emit = [&](int step, const std::string& name) {
        const ParameterVector theta = fit_current(state, config, step);
        curve.push_back({step, static_cast<int>(state.labeled.n()),
                         model_accuracy(config.model, theta, state.test), name});
    };

    int at_step = 0;
    try {
        emit(0, scorer_kind_name(config.scorer));
        for (int t = 1; t <= config.budget; ++t) {
            at_step = t;
            const PoolScores scores = score_pool(state, config);
            acquire_next(state, scores.values);
            emit(t, scores.random_fallback
                        ? std::string(scorer_kind_name(config.scorer)) + "+fallback"
                        : scorer_kind_name(config.scorer));
        }
    } catch (const NumericalError& err) {
        throw ActiveLearningError(
            "active learning failed at step " + std::to_string(at_step) + ": " + err.what(),
            std::move(curve));
    }
    return curve;
}

}  // namespace epimi
