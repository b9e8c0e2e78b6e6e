#pragma once

#include <cstdint>

#include "epimi/bootstrap.hpp"
#include "epimi/core.hpp"
#include "epimi/information.hpp"
#include "epimi/models.hpp"

namespace epimi {

struct InfluenceConfig {
    // Ridge added to the log-likelihood Hessian before factorizing; keeps the
    // solve well-posed when the Hessian has near-null directions.
    double damping = 1e-5;
    // MLPs restrict influence to the trailing linear layers (earlier layers
    // are treated as a frozen feature extractor).  Ignored for GLMs, whose
    // block is the full parameter vector.
    int trailing_layers = 2;
};

// Everything needed to replay weight perturbations without refitting:
//   H    = (1/n) sum_i d2 ln p(y_i | x_i, theta_hat)   (block-restricted)
//   IF_i = -(H + damping I)^{-1} score_i               (rows of `influence`)
// A weight vector xi then maps to the first-order parameter shift
//   theta_hat + sum_i (xi_i - 1/n) IF_i.
struct InfluenceCache {
    ModelSpec spec;
    ParameterVector theta_hat;
    Eigen::MatrixXd influence;  // n x block_size, row i = IF_i
    int block_offset = 0;
    int block_size = 0;
    double damping = 0.0;
};

// Fits theta_hat on uniform weights (train_seed feeds the MLP fit; GLMs
// ignore it), assembles the block Hessian, and solves for all n influence
// vectors against a single factorization.  A numerically singular damped
// Hessian raises NumericalError; the damping is never increased silently.
InfluenceCache build_influence_cache(const ModelSpec& spec, const LabeledDataset& data,
                                     const TrainingConfig& training, const InfluenceConfig& config,
                                     RngStream train_seed);

// First-order reweighted parameters for the draw xi.  Uniform weights return
// theta_hat bit-for-bit.
ParameterVector if_shift_parameters(const InfluenceCache& cache, const WeightVector& xi);

// Bootstrap mutual information with every refit replaced by its linear
// approximation: replicate b draws weights from RngStream(master_seed, b),
// exactly like build_bootstrap_ensemble, so the two estimates can be paired
// draw-for-draw.
MiEstimate if_bootstrap_mi(const InfluenceCache& cache, const Eigen::VectorXd& x_test,
                           int replicates, WeightScheme scheme, std::uint64_t master_seed);

}  // namespace epimi
