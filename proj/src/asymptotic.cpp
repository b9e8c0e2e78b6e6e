#include "epimi/asymptotic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace epimi {

namespace {

constexpr double kMaxCondition = 1e12;

int sample_label(const ProbabilityVector& p, RngStream& rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        cum += p[k];
        if (u < cum) return static_cast<int>(k);
    }
    return static_cast<int>(p.size()) - 1;
}

}  // namespace

double FisherInformation::condition_number() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix,
                                                          Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = solver.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

FisherInformation fisher_information(const ModelSpec& spec, const ParameterVector& theta0,
                                     const Eigen::MatrixXd& features, FisherMode mode,
                                     RngStream* rng) {
    spec.validate();
    check_parameters(spec, theta0);
    if (features.rows() < 1) throw ValidationError("fisher_information needs feature rows");
    if (features.cols() != spec.input_dim)
        throw ValidationError("fisher_information feature dimension mismatch");
    if (mode == FisherMode::Analytic && spec.kind == ModelKind::Mlp)
        throw ValidationError("analytic fisher information is only available for GLMs");
    if (mode == FisherMode::ScoreOuterProduct && rng == nullptr)
        throw ValidationError("score-outer-product fisher information needs an rng");

    const int p = spec.param_count();
    const Eigen::Index n = features.rows();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = features.row(i);
        if (mode == FisherMode::Analytic) {
            // GLM log-likelihood Hessians do not depend on the label, so the
            // conditional expectation E_y[-H] is just -H at any label.
            acc -= loglik_hessian(spec, theta0, x, 0);
        } else {
            const int y = sample_label(predict_proba(spec, theta0, x), *rng);
            const Eigen::VectorXd psi = score(spec, theta0, x, y);
            acc += psi * psi.transpose();
        }
    }

    FisherInformation fi;
    fi.matrix = acc / static_cast<double>(n);
    fi.theta0 = theta0;
    fi.sample_count = n;
    fi.mode = mode;
    return fi;
}

Eigen::MatrixXd prediction_gradient(const ModelSpec& spec, const ParameterVector& theta0,
                                    const Eigen::VectorXd& x) {
    const ProbabilityVector probs = predict_proba(spec, theta0, x);
    const int k_count = spec.class_count;
    Eigen::MatrixXd grad(k_count, spec.param_count());
    for (int k = 0; k < k_count; ++k)
        grad.row(k) = probs[k] * score(spec, theta0, x, k).transpose();
    return grad;
}

DeltaVariances delta_variances(const Eigen::MatrixXd& gradient,
                               const FisherInformation& fisher) {
    if (gradient.cols() != fisher.matrix.rows())
        throw ValidationError("gradient/fisher dimension mismatch");
    if (gradient.rows() < 2) throw ValidationError("prediction gradient needs >= 2 class rows");
    // Probabilities sum to one, so their Jacobian columns must cancel.
    const double column_drift = gradient.colwise().sum().cwiseAbs().maxCoeff();
    if (column_drift > 1e-8)
        throw ValidationError("prediction gradient rows do not sum to zero");

    const double cond = fisher.condition_number();
    if (!(cond <= kMaxCondition))
        throw NumericalError("fisher information is numerically singular (condition > 1e12)");

    Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher.matrix);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("fisher information factorization failed");
    const Eigen::MatrixXd solved = ldlt.solve(gradient.transpose());  // p x K

    DeltaVariances dv;
    dv.gradient = gradient;
    dv.sigma_sq.resize(gradient.rows());
    for (Eigen::Index k = 0; k < gradient.rows(); ++k) {
        const double v = gradient.row(k).dot(solved.col(k));
        if (v < -1e-10)
            throw NumericalError("delta-method variance came out negative");
        dv.sigma_sq[k] = std::max(0.0, v);
    }
    return dv;
}

double first_order_mi(const DeltaVariances& dv, const ProbabilityVector& p0, long n) {
    if (n < 1) throw ValidationError("first_order_mi needs n >= 1");
    if (p0.size() != static_cast<std::size_t>(dv.sigma_sq.size()))
        throw ValidationError("first_order_mi class count mismatch");
    double s = 0.0;
    for (Eigen::Index k = 0; k < dv.sigma_sq.size(); ++k) s += dv.sigma_sq[k] / p0[k];
    // Single final division: doubling n exactly halves the result.
    return s / (2.0 * static_cast<double>(n));
}

double binary_first_order_mi(const DeltaVariances& dv, const ProbabilityVector& p0, long n) {
    if (p0.size() != 2 || dv.sigma_sq.size() != 2)
        throw ValidationError("binary_first_order_mi requires exactly 2 classes");
    if (n < 1) throw ValidationError("binary_first_order_mi needs n >= 1");
    return dv.sigma_sq[1] / (2.0 * static_cast<double>(n) * p0[0] * p0[1]);
}

}  // namespace epimi
