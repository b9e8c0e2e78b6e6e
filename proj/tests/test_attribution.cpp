#include <doctest.h>

#include <cmath>
#include <vector>

#include <epimi/attribution.hpp>
#include <epimi/bootstrap.hpp>
#include <epimi/core.hpp>
#include <epimi/errors.hpp>
#include <epimi/models.hpp>
#include <epimi/rng.hpp>
#include <epimi/simulate.hpp>

using namespace epimi;

namespace {

ModelSpec logistic1() {
    ModelSpec s;
    s.kind = ModelKind::BinaryLogistic;
    s.input_dim = 1;
    s.class_count = 2;
    return s;
}

template <typename A, typename B>
bool same_values(const A& a, const B& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

// Refit with a single point's weight nudged by eps (mass taken uniformly).
ParameterVector refit_shifted(const ModelSpec& spec, const LabeledDataset& data, int point,
                              double eps, const TrainingConfig& cfg) {
    const Eigen::Index n = data.n();
    WeightVector xi;
    xi.weights = Eigen::VectorXd::Constant(n, (1.0 - eps) / static_cast<double>(n));
    xi.weights[point] += eps;
    return fit_weighted_mle(spec, data, xi, cfg, RngStream(0, 0));
}

}  // namespace

TEST_CASE("uniform weights return theta_hat bit-for-bit") {
    auto spec = logistic1();
    RngStream rng(100, 0);
    LabeledDataset data = make_logistic_data(50, Eigen::Vector2d(0.4, 1.0), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));
    auto shifted = if_shift_parameters(cache, WeightVector::uniform(50));
    CHECK(same_values(shifted, cache.theta_hat));
}

TEST_CASE("balanced intercept-only data gives exactly antisymmetric influence") {
    // theta_hat = 0 exactly, every score is +-(1/2, x=0 slope term), and the
    // Hessian is shared, so influence vectors for the two label groups negate
    // each other bit-for-bit.
    auto spec = logistic1();
    LabeledDataset data;
    const int n = 8;
    data.features = Eigen::MatrixXd::Zero(n, 1);
    data.labels.resize(n);
    data.class_count = 2;
    for (int i = 0; i < n; ++i) data.labels[i] = i % 2;
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));
    CHECK(cache.theta_hat.lpNorm<Eigen::Infinity>() <= 1e-12);
    for (int i = 0; i + 1 < n; i += 2) {
        Eigen::VectorXd a = cache.influence.row(i);
        Eigen::VectorXd b = cache.influence.row(i + 1);
        CHECK(same_values(a, Eigen::VectorXd(-b)));
    }
}

TEST_CASE("influence predicts single-point upweighting refits") {
    auto spec = logistic1();
    RngStream rng(101, 0);
    LabeledDataset data = make_logistic_data(50, Eigen::Vector2d(0.2, 0.8), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));

    const double eps = 0.5 / 50.0;
    double worst = 0.0;
    for (int point : {0, 7, 23, 41, 49}) {
        WeightVector xi;
        xi.weights = Eigen::VectorXd::Constant(50, (1.0 - eps) / 50.0);
        xi.weights[point] += eps;
        Eigen::VectorXd predicted = if_shift_parameters(cache, xi) - cache.theta_hat;
        Eigen::VectorXd actual = refit_shifted(spec, data, point, eps, tcfg) - cache.theta_hat;
        worst = std::max(worst, (predicted - actual).norm() / actual.norm());
    }
    CHECK(worst <= 0.10);
}

TEST_CASE("the linearization error vanishes faster than the shift") {
    auto spec = logistic1();
    RngStream rng(102, 0);
    LabeledDataset data = make_logistic_data(50, Eigen::Vector2d(-0.3, 1.1), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    icfg.damping = 1e-8;  // keep the ridge out of the convergence measurement
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));

    double prev = 1e300;
    for (double eps : {1e-1 / 50.0, 1e-2 / 50.0, 1e-3 / 50.0}) {
        WeightVector xi;
        xi.weights = Eigen::VectorXd::Constant(50, (1.0 - eps) / 50.0);
        xi.weights[11] += eps;
        Eigen::VectorXd predicted = if_shift_parameters(cache, xi) - cache.theta_hat;
        Eigen::VectorXd actual = refit_shifted(spec, data, 11, eps, tcfg) - cache.theta_hat;
        const double rel = (predicted - actual).norm() / actual.norm();
        CHECK(rel < prev);
        prev = rel;
    }
    CHECK(prev <= 1e-3);
}

TEST_CASE("default damping barely perturbs a well-conditioned problem") {
    auto spec = logistic1();
    RngStream rng(103, 0);
    LabeledDataset data = make_logistic_data(60, Eigen::Vector2d(0.1, 0.9), rng);
    TrainingConfig tcfg;
    InfluenceConfig damped;      // 1e-5 default
    InfluenceConfig undamped;
    undamped.damping = 0.0;
    auto a = build_influence_cache(spec, data, tcfg, damped, RngStream(1, 0));
    auto b = build_influence_cache(spec, data, tcfg, undamped, RngStream(1, 0));
    const double rel = (a.influence - b.influence).norm() / b.influence.norm();
    CHECK(rel <= 1e-3);
}

TEST_CASE("leave-one-out refits are tracked within ten percent") {
    auto spec = logistic1();
    RngStream rng(104, 0);
    LabeledDataset data = make_logistic_data(50, Eigen::Vector2d(0.5, 1.2), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));

    double worst = 0.0;
    for (int point : {3, 18, 34}) {
        WeightVector loo;
        loo.weights = Eigen::VectorXd::Constant(50, 1.0 / 49.0);
        loo.weights[point] = 0.0;
        Eigen::VectorXd predicted = if_shift_parameters(cache, loo) - cache.theta_hat;
        auto refit = fit_weighted_mle(spec, data, loo, tcfg, RngStream(0, 0));
        Eigen::VectorXd actual = refit - cache.theta_hat;
        worst = std::max(worst, (predicted - actual).norm() / actual.norm());
    }
    CHECK(worst <= 0.10);
}

TEST_CASE("a rank-deficient Hessian raises NumericalError instead of more ridge") {
    // Duplicate feature columns make the full Hessian singular; with the
    // ridge disabled the cache must refuse rather than repair.
    ModelSpec spec;
    spec.kind = ModelKind::BinaryLogistic;
    spec.input_dim = 2;
    spec.class_count = 2;
    RngStream rng(105, 0);
    LabeledDataset data;
    data.features.resize(40, 2);
    data.labels.resize(40);
    data.class_count = 2;
    for (int i = 0; i < 40; ++i) {
        const double v = rng.normal();
        data.features(i, 0) = v;
        data.features(i, 1) = v;
        data.labels[i] = rng.uniform01() < 0.5 ? 0 : 1;
    }
    TrainingConfig tcfg;
    tcfg.optimizer = OptimizerKind::GradientDescent;  // Newton would not separate but crawls
    tcfg.max_iterations = 200;
    InfluenceConfig icfg;
    icfg.damping = 0.0;
    CHECK_THROWS_AS(build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0)),
                    NumericalError);
}

TEST_CASE("MLP caches restrict influence to the trailing block") {
    ModelSpec spec;
    spec.kind = ModelKind::Mlp;
    spec.input_dim = 1;
    spec.class_count = 2;
    spec.hidden_layers = {3};
    RngStream rng(106, 0);
    LabeledDataset data = make_logistic_data(40, Eigen::Vector2d(0.3, 1.3), rng);
    TrainingConfig tcfg;
    tcfg.mlp_epochs = 80;
    InfluenceConfig icfg;
    icfg.trailing_layers = 1;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(5, 0));
    CHECK(cache.block_offset == trailing_block_offset(spec, 1));
    CHECK(cache.block_size == spec.param_count() - cache.block_offset);
    CHECK(cache.influence.rows() == 40);
    CHECK(cache.influence.cols() == cache.block_size);

    // Shifts leave the frozen feature-extractor block untouched.
    RngStream wrng(107, 0);
    auto xi = sample_dirichlet_weights(40, wrng);
    auto shifted = if_shift_parameters(cache, xi);
    for (int j = 0; j < cache.block_offset; ++j) CHECK(shifted[j] == cache.theta_hat[j]);
    bool block_moved = false;
    for (int j = cache.block_offset; j < spec.param_count(); ++j)
        if (shifted[j] != cache.theta_hat[j]) block_moved = true;
    CHECK(block_moved);
}

TEST_CASE("if_bootstrap_mi pairs with real bootstrap draws and is deterministic") {
    auto spec = logistic1();
    RngStream rng(108, 0);
    LabeledDataset data = make_logistic_data(60, Eigen::Vector2d(0.4, 1.4), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));
    Eigen::VectorXd x(1);
    x << 0.5;

    auto a = if_bootstrap_mi(cache, x, 64, WeightScheme::Multinomial, 77);
    auto b = if_bootstrap_mi(cache, x, 64, WeightScheme::Multinomial, 77);
    CHECK(a.mi == b.mi);
    CHECK(a.member_count == 64);

    // Same order of magnitude as the genuine refit estimate (the pairing
    // quality itself is measured in the acceptance suite).
    auto ens = build_bootstrap_ensemble(spec, data, 64, WeightScheme::Multinomial, tcfg, 77);
    auto real = mutual_information(ensemble_predictions(ens, x));
    CHECK(a.mi > 0.0);
    CHECK(a.mi / real.mi > 0.2);
    CHECK(a.mi / real.mi < 5.0);

    CHECK_THROWS_AS(if_bootstrap_mi(cache, x, 1, WeightScheme::Multinomial, 77),
                    ValidationError);
}

TEST_CASE("zeroed influence vectors produce exactly clustered predictions") {
    auto spec = logistic1();
    RngStream rng(109, 0);
    LabeledDataset data = make_logistic_data(30, Eigen::Vector2d(0.0, 1.0), rng);
    TrainingConfig tcfg;
    InfluenceConfig icfg;
    auto cache = build_influence_cache(spec, data, tcfg, icfg, RngStream(1, 0));
    cache.influence.setZero();
    Eigen::VectorXd x(1);
    x << -0.7;
    // Every replicate collapses onto theta_hat, so the ensemble has no spread.
    auto est = if_bootstrap_mi(cache, x, 16, WeightScheme::Dirichlet, 5);
    CHECK(est.mi <= 1e-12);
}
