#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epimi/core.hpp"
#include "epimi/models.hpp"
#include "epimi/rng.hpp"

namespace epimi {

// Dirichlet(1, ..., 1) weights: n Exp(1) draws normalized by their sum.
WeightVector sample_dirichlet_weights(Eigen::Index n, RngStream& rng);

// Multinomial(n, 1/n) counts scaled by 1/n (classic resampling with
// replacement expressed as weights).
WeightVector sample_multinomial_weights(Eigen::Index n, RngStream& rng);

// Weighted maximum likelihood for any model kind.
//
// GLMs use the configured optimizer: damped Newton (step halving on the
// objective, at most 30 halvings per iteration) or plain gradient ascent.
// Newton raises NumericalError("...did not converge") when the gradient
// sup-norm is still above tolerance after max_iterations, and
// NumericalError("...separated...") when the parameter sup-norm exceeds 1e6,
// which for a GLM means the weighted data are (numerically) separable.
// The MLP path delegates to train_mlp and uses `seed` for its stochastic
// ingredients; GLM fits are deterministic and ignore `seed`.
ParameterVector fit_weighted_mle(const ModelSpec& spec, const LabeledDataset& data,
                                 const WeightVector& xi, const TrainingConfig& config,
                                 RngStream seed,
                                 const ParameterVector* warm_start = nullptr);

// B weighted-MLE replicates plus the exact weight draws that produced them.
// Replicate b (1-based) draws weights from RngStream(master_seed, b) and, for
// MLPs, trains with RngStream(master_seed, kTrainingSeedBase + b).  A failed
// replicate is retried once on the kRetryBase-shifted streams; replicates
// that fail twice are dropped and recorded, and more than 10% failures is an
// error.  Results are identical for any thread count.
struct BootstrapEnsemble {
    ModelSpec spec;
    std::vector<ParameterVector> members;
    std::vector<WeightVector> weight_draws;  // aligned with members
    WeightScheme scheme = WeightScheme::Dirichlet;
    std::uint64_t master_seed = 0;
    int requested = 0;
    std::vector<int> failed_replicates;  // 1-based replicate ids that were dropped
};

BootstrapEnsemble build_bootstrap_ensemble(const ModelSpec& spec, const LabeledDataset& data,
                                           int replicates, WeightScheme scheme,
                                           const TrainingConfig& config,
                                           std::uint64_t master_seed, int threads = 1);

// Member predictions at one test point, rows in member order.
PredictionMatrix ensemble_predictions(const BootstrapEnsemble& ensemble,
                                      const Eigen::VectorXd& x_test);

// Full grid of models indexed by (resampled dataset b, training seed s):
// cell (b, s) is the weighted MLE under weight draw b trained with seed
// stream kTrainingSeedBase + s.  All cells of one b share that b's weights;
// all cells of one s share that s's training stream.  No retry policy here:
// a grid with holes would bias the decomposition, so any failure propagates.
struct SeedGridEnsemble {
    ModelSpec spec;
    int dataset_count = 0;  // B
    int seed_count = 0;     // S
    std::vector<ParameterVector> members;    // b * S + s
    std::vector<WeightVector> weight_draws;  // per b
    std::uint64_t master_seed = 0;
};

SeedGridEnsemble build_seed_grid(const ModelSpec& spec, const LabeledDataset& data,
                                 int dataset_count, int seed_count, WeightScheme scheme,
                                 const TrainingConfig& config, std::uint64_t master_seed,
                                 int threads = 1);

// S models trained on the full dataset (uniform weights) with the same
// training-seed streams the grid uses, i.e. only the seed varies.
std::vector<ParameterVector> build_deep_ensemble(const ModelSpec& spec,
                                                 const LabeledDataset& data, int seed_count,
                                                 const TrainingConfig& config,
                                                 std::uint64_t master_seed, int threads = 1);

PredictionMatrix member_predictions(const ModelSpec& spec,
                                    const std::vector<ParameterVector>& members,
                                    const Eigen::VectorXd& x_test);

}  // namespace epimi
