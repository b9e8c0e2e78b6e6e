#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epimi/core.hpp"
#include "epimi/rng.hpp"

namespace epimi {

// Flat parameter vector; layout is fixed by the model spec (see param_count).
using ParameterVector = Eigen::VectorXd;

enum class ModelKind { BinaryLogistic, Softmax, Mlp };
enum class OptimizerKind { Newton, GradientDescent };

// Architecture of a conditional class-probability model p(y | x, theta).
//
// binary-logistic: p(y=1) = sigmoid(theta . u) with u = (1, x) when the
//   intercept is included; parameters are [intercept, slopes].
// softmax: K-1 logit blocks of size |u| against a fixed reference class K-1
//   whose logit is zero, so the parameterization is identifiable and the
//   information matrix can be full rank.
// mlp: tanh hidden layers, softmax output over all K classes, biases always
//   present.  Layer l maps in -> out and stores W (column-major) then b.
struct ModelSpec {
    ModelKind kind = ModelKind::BinaryLogistic;
    int input_dim = 0;
    int class_count = 2;
    bool includes_intercept = true;
    std::vector<int> hidden_layers = {16};  // mlp only

    int param_count() const;
    // Size of one GLM input vector u (features plus optional intercept).
    int glm_input_size() const;
    void validate() const;
};

struct TrainingConfig {
    OptimizerKind optimizer = OptimizerKind::Newton;
    int max_iterations = 100;         // Newton / gradient-descent cap
    double gradient_tolerance = 1e-8; // sup-norm stopping rule
    double step_size = 0.1;           // gradient ascent step
    int mlp_epochs = 500;
    int batch_size = 0;               // 0 = full batch
    double init_scale = 0.5;          // stddev scale of seeded MLP init
    bool warm_start_glm = true;       // start replicate fits at the full-data MLE

    void validate() const;
};

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// Throws ValidationError unless theta is finite with spec.param_count() entries.
void check_parameters(const ModelSpec& spec, const ParameterVector& theta);

// Class probabilities at x, clipped onto the valid simplex.
ProbabilityVector predict_proba(const ModelSpec& spec, const ParameterVector& theta,
                                const Eigen::VectorXd& x);

// sum_i xi_i * ln p(y_i | x_i, theta).  Zero-weight terms are skipped, so a
// weight of exactly zero contributes exactly nothing.
double weighted_log_likelihood(const ModelSpec& spec, const ParameterVector& theta,
                               const LabeledDataset& data, const Eigen::VectorXd& weights);

// Gradient of ln p(y | x, theta) with respect to theta.
Eigen::VectorXd score(const ModelSpec& spec, const ParameterVector& theta,
                      const Eigen::VectorXd& x, int y);

// Hessian of ln p(y | x, theta).  Full matrix; GLMs get the analytic form,
// the MLP falls back to the block routine over all parameters.
Eigen::MatrixXd loglik_hessian(const ModelSpec& spec, const ParameterVector& theta,
                               const Eigen::VectorXd& x, int y);

// Hessian restricted to the parameter block [offset, offset + size).  For the
// MLP this is computed exactly by forward-mode differentiation of the
// backpropagated gradient, one seeded direction per block column.
Eigen::MatrixXd loglik_hessian_block(const ModelSpec& spec, const ParameterVector& theta,
                                     const Eigen::VectorXd& x, int y, int offset, int size);

// Offset of the parameter block covering the trailing `layers` linear layers
// of an MLP (for GLMs the block is everything and the offset is zero).
int trailing_block_offset(const ModelSpec& spec, int layers);

// Weighted maximum-likelihood training of the MLP by seeded gradient ascent:
// N(0, init_scale^2 / fan_in) initialisation and minibatch shuffling both
// draw from `seed`, and those are the only stochastic ingredients.  A
// non-finite training objective raises NumericalError.
ParameterVector train_mlp(const ModelSpec& spec, const LabeledDataset& data,
                          const Eigen::VectorXd& weights, const TrainingConfig& config,
                          RngStream seed);

}  // namespace epimi
