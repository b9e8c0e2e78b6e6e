#include "epimi/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace epimi {

namespace {

void check_simplex(const std::vector<double>& p) {
    if (p.size() < 2) throw ValidationError("probability vector needs at least 2 classes");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v)) throw ValidationError("probability vector has non-finite entry");
        if (v < kEpsClip || v > 1.0 - kEpsClip)
            throw ValidationError("probability entry outside [eps, 1-eps]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        throw ValidationError("probability vector does not sum to one");
}

}  // namespace

ProbabilityVector ProbabilityVector::from_raw(const std::vector<double>& raw) {
    return clip_and_normalize(raw);
}

ProbabilityVector ProbabilityVector::checked(std::vector<double> probs) {
    check_simplex(probs);
    return ProbabilityVector(std::move(probs));
}

ProbabilityVector clip_and_normalize(const std::vector<double>& raw) {
    if (raw.size() < 2) throw ValidationError("clip_and_normalize: need at least 2 classes");
    double sum = 0.0;
    for (double v : raw) {
        if (!std::isfinite(v)) throw ValidationError("clip_and_normalize: non-finite entry");
        if (v < 0.0) throw ValidationError("clip_and_normalize: negative entry");
        sum += v;
    }
    if (sum <= 0.0) throw ValidationError("clip_and_normalize: all entries zero");

    // Normalize to the simplex first so that the clip bounds are meaningful,
    // then clip, then renormalize.  The final renormalization can push a
    // clipped entry below the floor by at most K*eps^2, far inside the
    // kSimplexTol slack, but a last clamp keeps the lower bound exact.
    std::vector<double> p(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) p[k] = raw[k] / sum;
    double clipped_sum = 0.0;
    for (double& v : p) {
        v = std::clamp(v, kEpsClip, 1.0 - kEpsClip);
        clipped_sum += v;
    }
    for (double& v : p) {
        v /= clipped_sum;
        v = std::clamp(v, kEpsClip, 1.0 - kEpsClip);
    }
    return ProbabilityVector::checked(std::move(p));
}

double entropy(const ProbabilityVector& p) {
    double h = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) h -= p[k] * std::log(p[k]);
    return h;
}

PredictionMatrix::PredictionMatrix(std::vector<ProbabilityVector> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw ValidationError("prediction matrix needs at least one member");
    const std::size_t k = rows_.front().size();
    for (const auto& r : rows_)
        if (r.size() != k) throw ValidationError("prediction matrix rows disagree on class count");
}

ProbabilityVector mean_prediction(const PredictionMatrix& preds) {
    const std::size_t b_count = preds.member_count();
    const std::size_t k_count = preds.class_count();

    bool identical = true;
    for (std::size_t b = 1; b < b_count && identical; ++b)
        identical = preds.row(b) == preds.row(0);
    if (identical) return preds.row(0);

    std::vector<double> mean(k_count, 0.0);
    for (std::size_t b = 0; b < b_count; ++b)
        for (std::size_t k = 0; k < k_count; ++k) mean[k] += preds.row(b)[k];
    for (double& v : mean) v /= static_cast<double>(b_count);
    return ProbabilityVector::checked(std::move(mean));
}

void LabeledDataset::validate() const {
    if (features.rows() < 1) throw ValidationError("dataset is empty");
    if (labels.size() != features.rows())
        throw ValidationError("dataset has mismatched feature/label counts");
    if (class_count < 2) throw ValidationError("dataset needs at least 2 classes");
    if (!features.allFinite()) throw ValidationError("dataset has non-finite feature");
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count) {
            std::ostringstream msg;
            msg << "label " << labels[i] << " at row " << i << " outside [0, " << class_count
                << ")";
            throw ValidationError(msg.str());
        }
    }
}

WeightVector WeightVector::uniform(Eigen::Index n) {
    if (n < 1) throw ValidationError("weight vector needs at least one entry");
    WeightVector w;
    w.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    w.scheme = WeightScheme::Dirichlet;
    return w;
}

void WeightVector::validate() const {
    if (weights.size() < 1) throw ValidationError("weight vector is empty");
    if (!weights.allFinite()) throw ValidationError("weight vector has non-finite entry");
    // The scheme records how a vector was drawn; consumers accept any
    // normalized nonnegative reweighting (leave-one-out vectors, single-point
    // upweightings, ...), so only the universal invariants are enforced here.
    if ((weights.array() < 0.0).any())
        throw ValidationError("weight vector has a negative entry");
    if (std::abs(weights.sum() - 1.0) > kSimplexTol)
        throw ValidationError("weights do not sum to one");
}

const char* weight_scheme_name(WeightScheme scheme) {
    return scheme == WeightScheme::Dirichlet ? "dirichlet" : "multinomial";
}

WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "dirichlet") return WeightScheme::Dirichlet;
    if (name == "multinomial") return WeightScheme::Multinomial;
    throw ValidationError("unknown weight scheme '" + name + "' (dirichlet|multinomial)");
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    if (threads < 1) throw ValidationError("parallel_for: thread count must be >= 1");
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t first_error_index = count;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace epimi
