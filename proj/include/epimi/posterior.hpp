#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "epimi/core.hpp"
#include "epimi/information.hpp"
#include "epimi/models.hpp"
#include "epimi/rng.hpp"

namespace epimi {

// Independent Gaussian prior per parameter.
struct PriorSpec {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    static PriorSpec standard_normal(Eigen::Index p);
    void validate() const;
};

// Unnormalized log posterior: log likelihood of `data` (a dataset with zero
// rows contributes nothing, leaving the bare prior) plus the Gaussian
// log-prior without its additive constant, so the prior term vanishes at its
// mean.
double log_posterior(const ModelSpec& spec, const PriorSpec& prior, const LabeledDataset& data,
                     const ParameterVector& theta);

struct McmcConfig {
    long total_steps = 60000;
    long burn_in = 10000;
    long thinning = 25;
    double initial_scale = 0.5;
    // Burn-in adaptation: every window, multiply or divide the proposal scale
    // by adapt_factor when the window acceptance rate leaves [0.2, 0.4].  The
    // scale is frozen once burn-in ends, preserving detailed balance for
    // every recorded sample.
    long adapt_window = 100;
    double adapt_factor = 1.1;

    void validate(Eigen::Index dim) const;
};

struct McmcChain {
    std::vector<ParameterVector> samples;  // post burn-in, thinned
    long accepted = 0;                     // post burn-in tallies
    long rejected = 0;
    double acceptance_rate = 0.0;          // accepted / (accepted + rejected)
    double proposal_scale = 0.0;           // frozen post-burn-in value
    long total_steps = 0;
    long burn_in = 0;
    long thinning = 0;
};

// Random-walk Metropolis with an isotropic Gaussian proposal.  Each step
// consumes exactly dim normals plus one uniform from `rng`, so the chain is
// bit-reproducible from (master_seed, stream_id).  A run whose proposals are
// all rejected for 10 * dim consecutive windows raises NumericalError.
McmcChain metropolis_sample(const std::function<double(const ParameterVector&)>& log_post,
                            const ParameterVector& init, const McmcConfig& config,
                            RngStream rng);

// Mutual information of the posterior-predictive ensemble at x_test: the
// chain samples play the role of ensemble members.
MiEstimate bayesian_mi(const McmcChain& chain, const ModelSpec& spec,
                       const Eigen::VectorXd& x_test);

}  // namespace epimi
