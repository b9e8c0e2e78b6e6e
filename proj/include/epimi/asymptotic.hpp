#pragma once

#include <Eigen/Dense>

#include "epimi/core.hpp"
#include "epimi/models.hpp"
#include "epimi/rng.hpp"

namespace epimi {

enum class FisherMode { Analytic, ScoreOuterProduct };

// Fisher information matrix at theta0, averaged over the supplied feature
// rows.  `Analytic` uses the closed GLM form E_y[-d2 ln p]; the Monte Carlo
// mode simulates one label per feature row from the model and averages the
// score outer products (the only option for the MLP).
struct FisherInformation {
    Eigen::MatrixXd matrix;
    ParameterVector theta0;
    Eigen::Index sample_count = 0;
    FisherMode mode = FisherMode::Analytic;

    // |lambda|_max / |lambda|_min of the symmetric matrix.
    double condition_number() const;
};

FisherInformation fisher_information(const ModelSpec& spec, const ParameterVector& theta0,
                                     const Eigen::MatrixXd& features, FisherMode mode,
                                     RngStream* rng = nullptr);

// K x p Jacobian of the class probabilities at x: row k is p_k * score_k.
Eigen::MatrixXd prediction_gradient(const ModelSpec& spec, const ParameterVector& theta0,
                                    const Eigen::VectorXd& x);

// Delta-method variances sigma_k^2 = grad_k^T I^{-1} grad_k.  Construction
// refuses Fisher matrices with condition number above 1e12 (no silent ridge
// repair) and checks that the gradient columns sum to zero.
struct DeltaVariances {
    Eigen::VectorXd sigma_sq;   // per class
    Eigen::MatrixXd gradient;   // the K x p input Jacobian
};

DeltaVariances delta_variances(const Eigen::MatrixXd& gradient, const FisherInformation& fisher);

// First-order mutual information law: (1 / 2n) * sum_k sigma_k^2 / p0_k.
double first_order_mi(const DeltaVariances& dv, const ProbabilityVector& p0, long n);

// Two-class shortcut sigma_1^2 / (2 n p0 p1); agrees with first_order_mi.
double binary_first_order_mi(const DeltaVariances& dv, const ProbabilityVector& p0, long n);

}  // namespace epimi
