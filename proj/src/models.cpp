#include "epimi/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epimi {

namespace {

// ---------------------------------------------------------------------------
// Scalar abstraction: the MLP forward/backward pass below is templated on the
// scalar type so the same code yields values and gradients (double) or exact
// Hessian columns (Dual, forward-mode derivative carried through backprop).

struct Dual {
    double v = 0.0;
    double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual operator-(double a, Dual b) { return {a - b.v, -b.d}; }
inline Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }
inline Dual& operator+=(Dual& a, Dual b) {
    a.v += b.v;
    a.d += b.d;
    return a;
}

inline double sc_value(double x) { return x; }
inline double sc_value(Dual x) { return x.v; }
inline double sc_tanh(double x) { return std::tanh(x); }
inline Dual sc_tanh(Dual x) {
    const double t = std::tanh(x.v);
    return {t, (1.0 - t * t) * x.d};
}
inline double sc_exp(double x) { return std::exp(x); }
inline Dual sc_exp(Dual x) {
    const double e = std::exp(x.v);
    return {e, e * x.d};
}
inline double sc_log(double x) { return std::log(x); }
inline Dual sc_log(Dual x) { return {std::log(x.v), x.d / x.v}; }

// ---------------------------------------------------------------------------
// GLM plumbing.

// u = (1, x) or x depending on the intercept flag.
Eigen::VectorXd glm_input(const ModelSpec& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.input_dim)
        throw ValidationError("feature vector has wrong dimension");
    if (!spec.includes_intercept) return x;
    Eigen::VectorXd u(x.size() + 1);
    u[0] = 1.0;
    u.tail(x.size()) = x;
    return u;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ln sigmoid(z), stable for large |z|.
double log_sigmoid(double z) {
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

// Softmax logits with the reference class K-1 pinned at zero.
Eigen::VectorXd softmax_logits(const ModelSpec& spec, const ParameterVector& theta,
                               const Eigen::VectorXd& u) {
    const int k_count = spec.class_count;
    const int m = spec.glm_input_size();
    Eigen::VectorXd logits(k_count);
    for (int k = 0; k + 1 < k_count; ++k) logits[k] = theta.segment(k * m, m).dot(u);
    logits[k_count - 1] = 0.0;
    return logits;
}

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    p /= p.sum();
    return p;
}

double log_softmax_at(const Eigen::VectorXd& logits, int y) {
    const double m = logits.maxCoeff();
    const double log_z = m + std::log((logits.array() - m).exp().sum());
    return logits[y] - log_z;
}

// ---------------------------------------------------------------------------
// MLP plumbing.

std::vector<int> layer_sizes(const ModelSpec& spec) {
    std::vector<int> sizes;
    sizes.push_back(spec.input_dim);
    sizes.insert(sizes.end(), spec.hidden_layers.begin(), spec.hidden_layers.end());
    sizes.push_back(spec.class_count);
    return sizes;
}

// Parameter offset of linear layer l; layer l stores W (out x in, column-major)
// followed by b (out).
int layer_offset(const std::vector<int>& sizes, int l) {
    int off = 0;
    for (int k = 0; k < l; ++k) off += sizes[k + 1] * (sizes[k] + 1);
    return off;
}

// Plain double forward pass to the output logits.
Eigen::VectorXd mlp_forward_logits(const ModelSpec& spec, const ParameterVector& theta,
                                   const Eigen::VectorXd& x) {
    const std::vector<int> sizes = layer_sizes(spec);
    const int depth = static_cast<int>(sizes.size()) - 1;
    Eigen::VectorXd a = x;
    for (int l = 0; l < depth; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const int off = layer_offset(sizes, l);
        const Eigen::Map<const Eigen::MatrixXd> w(theta.data() + off, out, in);
        const Eigen::Map<const Eigen::VectorXd> b(theta.data() + off + out * in, out);
        Eigen::VectorXd z = w * a + b;
        a = (l + 1 < depth) ? z.array().tanh().matrix() : z;
    }
    return a;
}

// Forward pass plus (optionally) backpropagated gradient of ln p(y | x).
// Returns ln p(y | x, theta); when grad != nullptr it is resized to the full
// parameter count and filled.
template <typename Scalar>
Scalar mlp_logp_grad(const ModelSpec& spec, const std::vector<Scalar>& theta,
                     const Eigen::VectorXd& x, int y, std::vector<Scalar>* grad) {
    const std::vector<int> sizes = layer_sizes(spec);
    const int depth = static_cast<int>(sizes.size()) - 1;

    // Forward.  act[l] holds the layer-l activations (act[0] = x); the final
    // entry holds raw logits.
    std::vector<std::vector<Scalar>> act(depth + 1);
    act[0].resize(sizes[0]);
    for (int j = 0; j < sizes[0]; ++j) act[0][j] = Scalar{} + x[j];
    for (int l = 0; l < depth; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const int off = layer_offset(sizes, l);
        act[l + 1].assign(out, Scalar{});
        for (int i = 0; i < out; ++i) act[l + 1][i] = theta[off + in * out + i];  // bias
        for (int j = 0; j < in; ++j)
            for (int i = 0; i < out; ++i) act[l + 1][i] += theta[off + j * out + i] * act[l][j];
        if (l + 1 < depth)
            for (int i = 0; i < out; ++i) act[l + 1][i] = sc_tanh(act[l + 1][i]);
    }

    // Log-softmax over the logits.  Subtracting the (argmax) logit variable
    // rather than a detached constant keeps Dual derivatives exact.
    const std::vector<Scalar>& logits = act[depth];
    const int k_count = sizes[depth];
    int arg = 0;
    for (int k = 1; k < k_count; ++k)
        if (sc_value(logits[k]) > sc_value(logits[arg])) arg = k;
    Scalar z = Scalar{};
    for (int k = 0; k < k_count; ++k) z += sc_exp(logits[k] - logits[arg]);
    const Scalar log_norm = logits[arg] + sc_log(z);
    const Scalar logp = logits[y] - log_norm;

    if (grad != nullptr) {
        grad->assign(theta.size(), Scalar{});
        // d ln p / d logit_k = [k == y] - softmax_k
        std::vector<Scalar> delta(k_count);
        for (int k = 0; k < k_count; ++k) {
            delta[k] = Scalar{} - sc_exp(logits[k] - log_norm);
            if (k == y) delta[k] += Scalar{} + 1.0;
        }
        for (int l = depth - 1; l >= 0; --l) {
            const int in = sizes[l], out = sizes[l + 1];
            const int off = layer_offset(sizes, l);
            for (int i = 0; i < out; ++i) (*grad)[off + in * out + i] = delta[i];
            for (int j = 0; j < in; ++j)
                for (int i = 0; i < out; ++i) (*grad)[off + j * out + i] = delta[i] * act[l][j];
            if (l > 0) {
                std::vector<Scalar> prev(in, Scalar{});
                for (int j = 0; j < in; ++j) {
                    Scalar back = Scalar{};
                    for (int i = 0; i < out; ++i) back += theta[off + j * out + i] * delta[i];
                    // tanh'(z) = 1 - a^2, in Scalar arithmetic so Dual
                    // derivatives flow through the stored activation too.
                    prev[j] = back * (1.0 - act[l][j] * act[l][j]);
                }
                delta = std::move(prev);
            }
        }
    }
    return logp;
}

}  // namespace

int ModelSpec::glm_input_size() const { return input_dim + (includes_intercept ? 1 : 0); }

int ModelSpec::param_count() const {
    switch (kind) {
        case ModelKind::BinaryLogistic:
            return glm_input_size();
        case ModelKind::Softmax:
            return (class_count - 1) * glm_input_size();
        case ModelKind::Mlp: {
            const std::vector<int> sizes = layer_sizes(*this);
            int total = 0;
            for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
                total += sizes[l + 1] * (sizes[l] + 1);
            return total;
        }
    }
    throw ValidationError("unknown model kind");
}

void ModelSpec::validate() const {
    if (input_dim < 0) throw ValidationError("model input_dim must be >= 0");
    if (class_count < 2) throw ValidationError("model needs at least 2 classes");
    if (kind == ModelKind::BinaryLogistic && class_count != 2)
        throw ValidationError("binary-logistic requires exactly 2 classes");
    if (kind == ModelKind::Mlp) {
        if (hidden_layers.empty()) throw ValidationError("mlp needs at least one hidden layer");
        for (int w : hidden_layers)
            if (w < 1) throw ValidationError("mlp hidden width must be >= 1");
    } else if (glm_input_size() < 1) {
        throw ValidationError("model has no inputs (zero features and no intercept)");
    }
}

void TrainingConfig::validate() const {
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (!(gradient_tolerance > 0.0)) throw ValidationError("gradient_tolerance must be > 0");
    if (!(step_size > 0.0)) throw ValidationError("step_size must be > 0");
    if (mlp_epochs < 1) throw ValidationError("mlp_epochs must be >= 1");
    if (batch_size < 0) throw ValidationError("batch_size must be >= 0");
    if (!(init_scale > 0.0)) throw ValidationError("init_scale must be > 0");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::BinaryLogistic:
            return "binary-logistic";
        case ModelKind::Softmax:
            return "softmax";
        case ModelKind::Mlp:
            return "mlp";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "binary-logistic" || name == "logistic") return ModelKind::BinaryLogistic;
    if (name == "softmax") return ModelKind::Softmax;
    if (name == "mlp") return ModelKind::Mlp;
    throw ValidationError("unknown model '" + name + "' (binary-logistic|softmax|mlp)");
}

void check_parameters(const ModelSpec& spec, const ParameterVector& theta) {
    if (theta.size() != spec.param_count())
        throw ValidationError("parameter vector has wrong length for model spec");
    if (!theta.allFinite()) throw ValidationError("parameter vector has non-finite entry");
}

ProbabilityVector predict_proba(const ModelSpec& spec, const ParameterVector& theta,
                                const Eigen::VectorXd& x) {
    check_parameters(spec, theta);
    switch (spec.kind) {
        case ModelKind::BinaryLogistic: {
            const double p1 = sigmoid(theta.dot(glm_input(spec, x)));
            return clip_and_normalize({1.0 - p1, p1});
        }
        case ModelKind::Softmax: {
            const Eigen::VectorXd p = stable_softmax(softmax_logits(spec, theta, glm_input(spec, x)));
            return clip_and_normalize(std::vector<double>(p.data(), p.data() + p.size()));
        }
        case ModelKind::Mlp: {
            if (x.size() != spec.input_dim)
                throw ValidationError("feature vector has wrong dimension");
            const Eigen::VectorXd p = stable_softmax(mlp_forward_logits(spec, theta, x));
            return clip_and_normalize(std::vector<double>(p.data(), p.data() + p.size()));
        }
    }
    throw ValidationError("unknown model kind");
}

double weighted_log_likelihood(const ModelSpec& spec, const ParameterVector& theta,
                               const LabeledDataset& data, const Eigen::VectorXd& weights) {
    check_parameters(spec, theta);
    data.validate();
    if (weights.size() != data.n()) throw ValidationError("weights/dataset size mismatch");
    if (data.class_count != spec.class_count)
        throw ValidationError("dataset/model class count mismatch");

    std::vector<double> th;
    if (spec.kind == ModelKind::Mlp) th.assign(theta.data(), theta.data() + theta.size());

    double total = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;  // exact: zero weight contributes exactly nothing
        const Eigen::VectorXd x = data.features.row(i);
        const int y = data.labels[i];
        double logp = 0.0;
        switch (spec.kind) {
            case ModelKind::BinaryLogistic: {
                const double z = theta.dot(glm_input(spec, x));
                logp = log_sigmoid(y == 1 ? z : -z);
                break;
            }
            case ModelKind::Softmax:
                logp = log_softmax_at(softmax_logits(spec, theta, glm_input(spec, x)), y);
                break;
            case ModelKind::Mlp:
                logp = mlp_logp_grad<double>(spec, th, x, y, nullptr);
                break;
        }
        total += w * logp;
    }
    return total;
}

Eigen::VectorXd score(const ModelSpec& spec, const ParameterVector& theta,
                      const Eigen::VectorXd& x, int y) {
    check_parameters(spec, theta);
    if (y < 0 || y >= spec.class_count) throw ValidationError("score: label out of range");
    switch (spec.kind) {
        case ModelKind::BinaryLogistic: {
            const Eigen::VectorXd u = glm_input(spec, x);
            const double p1 = sigmoid(theta.dot(u));
            return ((y == 1 ? 1.0 : 0.0) - p1) * u;
        }
        case ModelKind::Softmax: {
            const Eigen::VectorXd u = glm_input(spec, x);
            const Eigen::VectorXd p = stable_softmax(softmax_logits(spec, theta, u));
            const int m = spec.glm_input_size();
            Eigen::VectorXd g(theta.size());
            for (int k = 0; k + 1 < spec.class_count; ++k)
                g.segment(k * m, m) = ((y == k ? 1.0 : 0.0) - p[k]) * u;
            return g;
        }
        case ModelKind::Mlp: {
            std::vector<double> th(theta.data(), theta.data() + theta.size());
            std::vector<double> grad;
            mlp_logp_grad<double>(spec, th, x, y, &grad);
            return Eigen::Map<Eigen::VectorXd>(grad.data(), grad.size());
        }
    }
    throw ValidationError("unknown model kind");
}

Eigen::MatrixXd loglik_hessian(const ModelSpec& spec, const ParameterVector& theta,
                               const Eigen::VectorXd& x, int y) {
    check_parameters(spec, theta);
    switch (spec.kind) {
        case ModelKind::BinaryLogistic: {
            const Eigen::VectorXd u = glm_input(spec, x);
            const double p1 = sigmoid(theta.dot(u));
            return -p1 * (1.0 - p1) * (u * u.transpose());
        }
        case ModelKind::Softmax: {
            const Eigen::VectorXd u = glm_input(spec, x);
            const Eigen::VectorXd p = stable_softmax(softmax_logits(spec, theta, u));
            const int m = spec.glm_input_size();
            const int blocks = spec.class_count - 1;
            Eigen::MatrixXd h(theta.size(), theta.size());
            const Eigen::MatrixXd outer = u * u.transpose();
            for (int k = 0; k < blocks; ++k)
                for (int l = 0; l < blocks; ++l) {
                    const double c = -(p[k] * ((k == l) ? 1.0 : 0.0) - p[k] * p[l]);
                    h.block(k * m, l * m, m, m) = c * outer;
                }
            return h;
        }
        case ModelKind::Mlp:
            return loglik_hessian_block(spec, theta, x, y, 0, spec.param_count());
    }
    throw ValidationError("unknown model kind");
}

Eigen::MatrixXd loglik_hessian_block(const ModelSpec& spec, const ParameterVector& theta,
                                     const Eigen::VectorXd& x, int y, int offset, int size) {
    check_parameters(spec, theta);
    if (offset < 0 || size < 1 || offset + size > spec.param_count())
        throw ValidationError("hessian block out of range");
    if (spec.kind != ModelKind::Mlp)
        return loglik_hessian(spec, theta, x, y).block(offset, offset, size, size);

    Eigen::MatrixXd h(size, size);
    std::vector<Dual> th(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) th[i] = {theta[i], 0.0};
    std::vector<Dual> grad;
    for (int c = 0; c < size; ++c) {
        th[offset + c].d = 1.0;
        mlp_logp_grad<Dual>(spec, th, x, y, &grad);
        for (int r = 0; r < size; ++r) h(r, c) = grad[offset + r].d;
        th[offset + c].d = 0.0;
    }
    return h;
}

int trailing_block_offset(const ModelSpec& spec, int layers) {
    if (spec.kind != ModelKind::Mlp) return 0;
    const std::vector<int> sizes = layer_sizes(spec);
    const int depth = static_cast<int>(sizes.size()) - 1;
    const int keep = std::clamp(layers, 1, depth);
    return layer_offset(sizes, depth - keep);
}

ParameterVector train_mlp(const ModelSpec& spec, const LabeledDataset& data,
                          const Eigen::VectorXd& weights, const TrainingConfig& config,
                          RngStream seed) {
    spec.validate();
    config.validate();
    data.validate();
    if (spec.kind != ModelKind::Mlp) throw ValidationError("train_mlp requires an mlp spec");
    if (weights.size() != data.n()) throw ValidationError("weights/dataset size mismatch");
    if (data.class_count != spec.class_count || data.dim() != spec.input_dim)
        throw ValidationError("dataset shape does not match mlp spec");

    const std::vector<int> sizes = layer_sizes(spec);
    const int depth = static_cast<int>(sizes.size()) - 1;
    const int p = spec.param_count();

    // Seeded init: weights ~ N(0, init_scale^2 / fan_in), biases zero.  Draw
    // order (layer-major, column-major within a layer) is part of the
    // reproducibility contract.
    std::vector<double> theta(p, 0.0);
    for (int l = 0; l < depth; ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const int off = layer_offset(sizes, l);
        const double sd = config.init_scale / std::sqrt(std::max(1, in));
        for (int j = 0; j < in; ++j)
            for (int i = 0; i < out; ++i) theta[off + j * out + i] = sd * seed.normal();
    }

    const Eigen::Index n = data.n();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<double> grad, point_grad;

    for (int epoch = 0; epoch < config.mlp_epochs; ++epoch) {
        double objective = 0.0;
        if (config.batch_size > 0) {
            // Seeded Fisher-Yates shuffle; the only other randomness is init.
            for (Eigen::Index i = n - 1; i > 0; --i) {
                const Eigen::Index j =
                    static_cast<Eigen::Index>(seed.uniform_below(static_cast<std::uint64_t>(i + 1)));
                std::swap(order[i], order[j]);
            }
        }
        const Eigen::Index batch =
            config.batch_size > 0 ? std::min<Eigen::Index>(config.batch_size, n) : n;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index stop = std::min(start + batch, n);
            grad.assign(p, 0.0);
            for (Eigen::Index pos = start; pos < stop; ++pos) {
                const Eigen::Index i = order[pos];
                const double w = weights[i];
                if (w == 0.0) continue;
                const Eigen::VectorXd x = data.features.row(i);
                objective +=
                    w * mlp_logp_grad<double>(spec, theta, x, data.labels[i], &point_grad);
                for (int k = 0; k < p; ++k) grad[k] += w * point_grad[k];
            }
            // Rescale minibatch gradients so each step estimates the full
            // weighted gradient (scale is exactly step_size for full batch).
            const double scale =
                config.step_size * static_cast<double>(n) / static_cast<double>(stop - start);
            for (int k = 0; k < p; ++k) theta[k] += scale * grad[k];
        }
        if (!std::isfinite(objective))
            throw NumericalError("mlp training objective diverged (non-finite loss)");
    }
    for (double v : theta)
        if (!std::isfinite(v))
            throw NumericalError("mlp training diverged (non-finite parameter)");
    return Eigen::Map<Eigen::VectorXd>(theta.data(), p);
}

}  // namespace epimi
