#pragma once

#include <vector>

#include "epimi/core.hpp"

namespace epimi {

// Ensemble-spread summary at one test point, in nats.
//   total_entropy: H(mean of member predictions)
//   mean_entropy:  mean of member prediction entropies
//   mi:            total_entropy - mean_entropy, clamped at zero.
// Jensen's inequality makes the raw difference nonnegative up to rounding;
// anything below -1e-9 means the inputs were inconsistent and is an error.
struct MiEstimate {
    double mi = 0.0;
    double total_entropy = 0.0;
    double mean_entropy = 0.0;
    int member_count = 0;
};

MiEstimate mutual_information(const PredictionMatrix& preds);

// Same computation, named for the ensemble whose members differ only by
// training seed rather than by resampled data.
MiEstimate deep_ensemble_mi(const PredictionMatrix& preds);

// Predictions over a (resampled dataset b, training seed s) grid, flattened
// row-major: cell(b, s) = cells[b * seed_count + s].
struct PredictionGrid {
    int dataset_count = 0;
    int seed_count = 0;
    std::vector<ProbabilityVector> cells;

    const ProbabilityVector& cell(int b, int s) const {
        return cells[static_cast<std::size_t>(b) * seed_count + s];
    }
    void validate() const;
};

// Split of the grid's total spread into a resampling part and a seed part:
//   seeds      = mean_b [ H(mean_s cell(b, s)) - mean_s H(cell(b, s)) ]
//   resampling = H(grand mean) - mean_b H(mean_s cell(b, s))
// The two parts sum to the total exactly (same nested means, one algebraic
// cancellation), so the identity holds to floating-point roundoff.
struct MiDecomposition {
    MiEstimate total;      // over all B*S members
    double resampling = 0.0;
    double seeds = 0.0;
    int dataset_count = 0;
    int seed_count = 0;
};

MiDecomposition decompose_mi(const PredictionGrid& grid);

// Cheap surrogate: (1/2) * sum_k Var_b[p_k] / mean_b[p_k] (population
// variance over members).  Second-order Taylor of the mutual information,
// accurate when member predictions are tightly clustered.
double variance_ratio_mi(const PredictionMatrix& preds);

// Max-minus-min spread of the predicted probability of one designated class.
double true_class_spread(const PredictionMatrix& preds, int true_label);

}  // namespace epimi
