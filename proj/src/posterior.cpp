#include "epimi/posterior.hpp"

#include <cmath>

namespace epimi {

PriorSpec PriorSpec::standard_normal(Eigen::Index p) {
    PriorSpec prior;
    prior.mean = Eigen::VectorXd::Zero(p);
    prior.stddev = Eigen::VectorXd::Ones(p);
    return prior;
}

void PriorSpec::validate() const {
    if (mean.size() < 1 || mean.size() != stddev.size())
        throw ValidationError("prior mean/stddev size mismatch");
    if (!mean.allFinite() || !stddev.allFinite())
        throw ValidationError("prior has non-finite entries");
    if ((stddev.array() <= 0.0).any()) throw ValidationError("prior stddev must be positive");
}

double log_posterior(const ModelSpec& spec, const PriorSpec& prior, const LabeledDataset& data,
                     const ParameterVector& theta) {
    spec.validate();
    prior.validate();
    check_parameters(spec, theta);
    if (prior.mean.size() != theta.size())
        throw ValidationError("prior dimension does not match parameter count");

    double lp = 0.0;
    if (data.n() > 0) {
        lp = weighted_log_likelihood(spec, theta, data, Eigen::VectorXd::Ones(data.n()));
    }
    const Eigen::ArrayXd z = (theta - prior.mean).array() / prior.stddev.array();
    lp -= 0.5 * (z * z).sum();
    return lp;
}

void McmcConfig::validate(Eigen::Index dim) const {
    if (dim < 1) throw ValidationError("mcmc needs at least one parameter");
    if (burn_in < 0) throw ValidationError("mcmc burn_in must be >= 0");
    if (thinning < 1) throw ValidationError("mcmc thinning must be >= 1");
    if (total_steps < burn_in + thinning)
        throw ValidationError("mcmc total_steps leaves no post-burn-in samples");
    if (!(initial_scale > 0.0)) throw ValidationError("mcmc initial_scale must be > 0");
    if (adapt_window < 1) throw ValidationError("mcmc adapt_window must be >= 1");
    if (!(adapt_factor > 1.0)) throw ValidationError("mcmc adapt_factor must be > 1");
}

McmcChain metropolis_sample(const std::function<double(const ParameterVector&)>& log_post,
                            const ParameterVector& init, const McmcConfig& config,
                            RngStream rng) {
    const Eigen::Index dim = init.size();
    config.validate(dim);
    if (!init.allFinite()) throw ValidationError("mcmc init has non-finite entries");

    ParameterVector current = init;
    double lp_current = log_post(current);
    if (!std::isfinite(lp_current))
        throw NumericalError("mcmc initial point has non-finite log posterior");

    McmcChain chain;
    chain.total_steps = config.total_steps;
    chain.burn_in = config.burn_in;
    chain.thinning = config.thinning;
    chain.samples.reserve((config.total_steps - config.burn_in) / config.thinning);

    double scale = config.initial_scale;
    long window_accepts = 0;
    long empty_windows = 0;
    const long max_empty_windows = 10 * static_cast<long>(dim);

    ParameterVector proposal(dim);
    for (long step = 1; step <= config.total_steps; ++step) {
        // Fixed stream consumption per step: dim normals + one uniform.
        for (Eigen::Index j = 0; j < dim; ++j) proposal[j] = current[j] + scale * rng.normal();
        const double u = rng.uniform01();
        const double lp_prop = log_post(proposal);
        // A NaN or -inf log posterior compares false and is rejected.
        const bool accept = (lp_prop - lp_current) > std::log(u);
        if (accept) {
            current = proposal;
            lp_current = lp_prop;
            ++window_accepts;
        }
        if (step > config.burn_in) {
            if (accept)
                ++chain.accepted;
            else
                ++chain.rejected;
            if ((step - config.burn_in) % config.thinning == 0) chain.samples.push_back(current);
        }

        if (step % config.adapt_window == 0) {
            empty_windows = (window_accepts == 0) ? empty_windows + 1 : 0;
            if (empty_windows >= max_empty_windows)
                throw NumericalError(
                    "mcmc chain is stuck: no acceptance for 10*dim consecutive windows");
            if (step <= config.burn_in) {
                const double rate = static_cast<double>(window_accepts) /
                                    static_cast<double>(config.adapt_window);
                if (rate < 0.2)
                    scale /= config.adapt_factor;
                else if (rate > 0.4)
                    scale *= config.adapt_factor;
            }
            window_accepts = 0;
        }
    }

    chain.proposal_scale = scale;
    chain.acceptance_rate = static_cast<double>(chain.accepted) /
                            static_cast<double>(chain.accepted + chain.rejected);
    return chain;
}

MiEstimate bayesian_mi(const McmcChain& chain, const ModelSpec& spec,
                       const Eigen::VectorXd& x_test) {
    if (chain.samples.size() < 2)
        throw ValidationError("bayesian_mi needs at least two posterior samples");
    std::vector<ProbabilityVector> rows;
    rows.reserve(chain.samples.size());
    for (const ParameterVector& theta : chain.samples)
        rows.push_back(predict_proba(spec, theta, x_test));
    return mutual_information(PredictionMatrix(std::move(rows)));
}

}  // namespace epimi
