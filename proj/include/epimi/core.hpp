#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "epimi/errors.hpp"

namespace epimi {

// Probabilities are kept inside [kEpsClip, 1 - kEpsClip] so that logs and
// divisions stay finite everywhere downstream.
inline constexpr double kEpsClip = 1e-12;
// Tolerance on |sum - 1| for anything claiming to live on the simplex.
inline constexpr double kSimplexTol = 1e-9;

// A categorical distribution over K >= 2 classes.  Instances are always
// valid: every entry in [kEpsClip, 1 - kEpsClip] and the total within
// kSimplexTol of one.  Construct via from_raw (clips + normalizes arbitrary
// nonnegative scores) or checked (validates exact probabilities).
class ProbabilityVector {
public:
    static ProbabilityVector from_raw(const std::vector<double>& raw);
    static ProbabilityVector checked(std::vector<double> probs);

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t k) const { return p_[k]; }
    const std::vector<double>& probs() const { return p_; }

    bool operator==(const ProbabilityVector& other) const { return p_ == other.p_; }

private:
    explicit ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {}
    std::vector<double> p_;
};

// Clip entries into [kEpsClip, 1 - kEpsClip] and renormalize to sum one.
// Rejects vectors with negative or non-finite entries or all-zero mass.
ProbabilityVector clip_and_normalize(const std::vector<double>& raw);

// Shannon entropy in nats: -sum_k p_k ln p_k.
double entropy(const ProbabilityVector& p);

// Predictions of an ensemble at one test point: one row per member, all rows
// over the same K classes, at least one member.
class PredictionMatrix {
public:
    explicit PredictionMatrix(std::vector<ProbabilityVector> rows);

    std::size_t member_count() const { return rows_.size(); }
    std::size_t class_count() const { return rows_.front().size(); }
    const ProbabilityVector& row(std::size_t b) const { return rows_[b]; }
    const std::vector<ProbabilityVector>& rows() const { return rows_; }

private:
    std::vector<ProbabilityVector> rows_;
};

// Coordinatewise mean of the member predictions.  The mean of valid
// probability vectors is again valid, and the mean of bit-identical rows is
// returned as that exact row (no accumulation rounding).
ProbabilityVector mean_prediction(const PredictionMatrix& preds);

// Feature matrix plus integer labels in [0, class_count).  Row order is
// meaningful and preserved by everything that consumes a dataset.
struct LabeledDataset {
    Eigen::MatrixXd features;  // n x d
    Eigen::VectorXi labels;    // n
    int class_count = 0;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    // Requires n >= 1, finite features, labels inside [0, class_count).
    void validate() const;
};

enum class WeightScheme { Dirichlet, Multinomial };

// One resampling draw over the n training points.  Dirichlet weights are
// strictly positive and sum to one; multinomial weights are counts/n and may
// contain zeros.  Either way the total is one within kSimplexTol.
struct WeightVector {
    Eigen::VectorXd weights;
    WeightScheme scheme = WeightScheme::Dirichlet;

    Eigen::Index size() const { return weights.size(); }
    static WeightVector uniform(Eigen::Index n);
    void validate() const;
};

const char* weight_scheme_name(WeightScheme scheme);
WeightScheme parse_weight_scheme(const std::string& name);

// Runs body(i) for i in [0, count) on up to `threads` workers.  Work is
// assigned by index, so any output written to slot i of a preallocated buffer
// lands in the same place regardless of thread count; exceptions are
// collected and the first one (by index) is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace epimi
