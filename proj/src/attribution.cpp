#include "epimi/attribution.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace epimi {

InfluenceCache build_influence_cache(const ModelSpec& spec, const LabeledDataset& data,
                                     const TrainingConfig& training,
                                     const InfluenceConfig& config, RngStream train_seed) {
    spec.validate();
    training.validate();
    data.validate();
    if (!(config.damping >= 0.0) || !std::isfinite(config.damping))
        throw ValidationError("influence damping must be finite and >= 0");
    if (config.trailing_layers < 1) throw ValidationError("trailing_layers must be >= 1");

    InfluenceCache cache;
    cache.spec = spec;
    cache.damping = config.damping;
    cache.theta_hat =
        fit_weighted_mle(spec, data, WeightVector::uniform(data.n()), training, train_seed);

    const int p = spec.param_count();
    cache.block_offset = trailing_block_offset(spec, config.trailing_layers);
    cache.block_size = p - cache.block_offset;

    const Eigen::Index n = data.n();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(cache.block_size, cache.block_size);
    Eigen::MatrixXd scores(n, cache.block_size);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = data.features.row(i);
        h += loglik_hessian_block(spec, cache.theta_hat, x, data.labels[i], cache.block_offset,
                                  cache.block_size);
        scores.row(i) = score(spec, cache.theta_hat, x, data.labels[i])
                            .segment(cache.block_offset, cache.block_size)
                            .transpose();
    }
    h /= static_cast<double>(n);
    h.diagonal().array() += config.damping;

    // Refuse to proceed on a numerically singular damped Hessian.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(h, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = eigs.eigenvalues().cwiseAbs();
    if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e14)
        throw NumericalError("damped hessian is numerically singular; cannot form influence");

    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("damped hessian factorization failed");
    cache.influence = -ldlt.solve(scores.transpose()).transpose();  // n x block
    if (!cache.influence.allFinite())
        throw NumericalError("influence solve produced non-finite values");
    return cache;
}

ParameterVector if_shift_parameters(const InfluenceCache& cache, const WeightVector& xi) {
    xi.validate();
    if (xi.size() != cache.influence.rows())
        throw ValidationError("weight vector size does not match influence cache");
    const double uniform = 1.0 / static_cast<double>(xi.size());

    ParameterVector theta = cache.theta_hat;
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(cache.block_size);
    bool any = false;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const double d = xi.weights[i] - uniform;
        if (d != 0.0) {
            shift += d * cache.influence.row(i).transpose();
            any = true;
        }
    }
    // Exactly uniform weights never touch theta_hat.
    if (any) theta.segment(cache.block_offset, cache.block_size) += shift;
    return theta;
}

MiEstimate if_bootstrap_mi(const InfluenceCache& cache, const Eigen::VectorXd& x_test,
                           int replicates, WeightScheme scheme, std::uint64_t master_seed) {
    if (replicates < 2) throw ValidationError("if_bootstrap_mi needs at least 2 replicates");
    const Eigen::Index n = cache.influence.rows();
    std::vector<ProbabilityVector> rows;
    rows.reserve(replicates);
    for (int b = 1; b <= replicates; ++b) {
        RngStream wstream(master_seed, static_cast<std::uint64_t>(b));
        const WeightVector xi = scheme == WeightScheme::Dirichlet
                                    ? sample_dirichlet_weights(n, wstream)
                                    : sample_multinomial_weights(n, wstream);
        rows.push_back(predict_proba(cache.spec, if_shift_parameters(cache, xi), x_test));
    }
    return mutual_information(PredictionMatrix(std::move(rows)));
}

}  // namespace epimi
