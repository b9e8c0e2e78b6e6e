#include "epimi/information.hpp"

#include <algorithm>
#include <cmath>

namespace epimi {

namespace {

// Raw differences more negative than this indicate inconsistent inputs, not
// rounding: Jensen's inequality guarantees the true value is nonnegative.
constexpr double kJensenSlack = -1e-9;

MiEstimate mi_from_parts(double total_entropy, double mean_entropy, int members) {
    const double raw = total_entropy - mean_entropy;
    if (raw < kJensenSlack)
        throw NumericalError("mutual information came out negative beyond rounding slack");
    MiEstimate est;
    est.total_entropy = total_entropy;
    est.mean_entropy = mean_entropy;
    est.mi = std::max(0.0, raw);
    est.member_count = members;
    return est;
}

}  // namespace

MiEstimate mutual_information(const PredictionMatrix& preds) {
    const std::size_t b_count = preds.member_count();
    const double total = entropy(mean_prediction(preds));
    double mean = 0.0;
    for (std::size_t b = 0; b < b_count; ++b) mean += entropy(preds.row(b));
    mean /= static_cast<double>(b_count);
    return mi_from_parts(total, mean, static_cast<int>(b_count));
}

MiEstimate deep_ensemble_mi(const PredictionMatrix& preds) { return mutual_information(preds); }

void PredictionGrid::validate() const {
    if (dataset_count < 1 || seed_count < 1)
        throw ValidationError("prediction grid needs dataset_count >= 1 and seed_count >= 1");
    if (cells.size() != static_cast<std::size_t>(dataset_count) * seed_count)
        throw ValidationError("prediction grid cell count does not match its shape");
    const std::size_t k = cells.front().size();
    for (const auto& c : cells)
        if (c.size() != k) throw ValidationError("prediction grid cells disagree on class count");
}

MiDecomposition decompose_mi(const PredictionGrid& grid) {
    grid.validate();
    const int b_count = grid.dataset_count;
    const int s_count = grid.seed_count;

    // Per-dataset summaries.  Every quantity that appears twice in the
    // telescoping identity below is computed once and reused, so the split
    // matches the total to rounding of two subtractions.
    std::vector<ProbabilityVector> per_dataset_mean;  // q_b = mean over seeds
    per_dataset_mean.reserve(b_count);
    double mean_hq = 0.0;  // mean_b H(q_b)
    double mean_mh = 0.0;  // mean_b mean_s H(cell)
    for (int b = 0; b < b_count; ++b) {
        std::vector<ProbabilityVector> rows;
        rows.reserve(s_count);
        for (int s = 0; s < s_count; ++s) rows.push_back(grid.cell(b, s));
        PredictionMatrix seeds_of_b(std::move(rows));
        per_dataset_mean.push_back(mean_prediction(seeds_of_b));
        mean_hq += entropy(per_dataset_mean.back());
        double mh = 0.0;
        for (int s = 0; s < s_count; ++s) mh += entropy(grid.cell(b, s));
        mean_mh += mh / static_cast<double>(s_count);
    }
    mean_hq /= static_cast<double>(b_count);
    mean_mh /= static_cast<double>(b_count);

    const ProbabilityVector grand = mean_prediction(PredictionMatrix(std::move(per_dataset_mean)));
    const double h_grand = entropy(grand);

    MiDecomposition out;
    out.dataset_count = b_count;
    out.seed_count = s_count;
    out.total = mi_from_parts(h_grand, mean_mh, b_count * s_count);
    out.resampling = h_grand - mean_hq;
    out.seeds = mean_hq - mean_mh;
    if (out.resampling < kJensenSlack || out.seeds < kJensenSlack)
        throw NumericalError("decomposition component negative beyond rounding slack");
    return out;
}

double variance_ratio_mi(const PredictionMatrix& preds) {
    const std::size_t b_count = preds.member_count();
    const std::size_t k_count = preds.class_count();
    const ProbabilityVector mean = mean_prediction(preds);
    double ratio = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        double var = 0.0;
        for (std::size_t b = 0; b < b_count; ++b) {
            const double d = preds.row(b)[k] - mean[k];
            var += d * d;
        }
        var /= static_cast<double>(b_count);  // population variance
        ratio += var / mean[k];
    }
    return 0.5 * ratio;
}

double true_class_spread(const PredictionMatrix& preds, int true_label) {
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= preds.class_count())
        throw ValidationError("true_class_spread: label out of range");
    double lo = preds.row(0)[true_label];
    double hi = lo;
    for (std::size_t b = 1; b < preds.member_count(); ++b) {
        lo = std::min(lo, preds.row(b)[true_label]);
        hi = std::max(hi, preds.row(b)[true_label]);
    }
    return hi - lo;
}

}  // namespace epimi
