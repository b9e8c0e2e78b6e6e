#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epimi/bootstrap.hpp"
#include "epimi/core.hpp"
#include "epimi/models.hpp"

namespace epimi {

enum class ScorerKind { BootstrapMi, EnsembleMi, Random };

const char* scorer_kind_name(ScorerKind kind);
ScorerKind parse_scorer_kind(const std::string& name);

// Pool-based acquisition state.  `pool_original_index[j]` remembers where the
// j-th remaining pool row sat in the initial pool, and `acquired` records
// those original indices in acquisition order (hence duplicate-free).
struct PoolState {
    LabeledDataset labeled;
    LabeledDataset pool;
    LabeledDataset test;
    std::vector<int> pool_original_index;
    std::vector<int> acquired;
    int step = 0;

    static PoolState make(LabeledDataset labeled, LabeledDataset pool, LabeledDataset test);
    void validate() const;
};

struct AcquisitionConfig {
    ScorerKind scorer = ScorerKind::BootstrapMi;
    int ensemble_size = 5;  // bootstrap replicates B or training seeds S
    int budget = 30;
    ModelSpec model;
    TrainingConfig training;
    WeightScheme scheme = WeightScheme::Dirichlet;
    std::uint64_t master_seed = 0;
    int threads = 1;

    void validate() const;
};

// Per-pool-point acquisition scores for the current step.  When the labeled
// set holds a single class no per-model uncertainty is identifiable, so the
// scorer falls back to i.i.d. uniform scores and flags it.
struct PoolScores {
    std::vector<double> values;
    bool random_fallback = false;
};

PoolScores score_pool(const PoolState& state, const AcquisitionConfig& config);

// Scores for an already-built member set (the seam score_pool rides on).
std::vector<double> scores_from_members(const ModelSpec& spec,
                                        const std::vector<ParameterVector>& members,
                                        const LabeledDataset& pool);

// Moves the argmax-scored pool point (lowest index on ties) into the labeled
// set and returns its original pool index.
int acquire_next(PoolState& state, const std::vector<double>& scores);

struct AccuracyPoint {
    int step = 0;
    int n_labeled = 0;
    double accuracy = 0.0;
    std::string scorer;
};

// Thrown when a refit inside the acquisition loop fails; carries the curve
// accumulated so far so callers can persist the partial result.
class ActiveLearningError : public NumericalError {
public:
    ActiveLearningError(const std::string& what, std::vector<AccuracyPoint> partial)
        : NumericalError(what), partial_curve(std::move(partial)) {}
    std::vector<AccuracyPoint> partial_curve;
};

// Full acquisition loop: evaluate, score, acquire, refit, repeat `budget`
// times.  Returns budget + 1 rows (step 0 is the initial fit).  Rows where
// the scorer fell back to random are labeled "<scorer>+fallback".
std::vector<AccuracyPoint> run_active_learning(PoolState state, const AcquisitionConfig& config);

// Fraction of test rows whose argmax prediction matches the label.
double model_accuracy(const ModelSpec& spec, const ParameterVector& theta,
                      const LabeledDataset& test);

}  // namespace epimi
