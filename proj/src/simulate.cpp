#include "epimi/simulate.hpp"

#include <cmath>

namespace epimi {

LabeledDataset make_logistic_data(Eigen::Index n, const Eigen::Vector2d& theta0, RngStream& rng) {
    if (n < 1) throw ValidationError("make_logistic_data needs n >= 1");
    LabeledDataset data;
    data.features.resize(n, 1);
    data.labels.resize(n);
    data.class_count = 2;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = rng.normal();
        data.features(i, 0) = x;
        const double z = theta0[0] + theta0[1] * x;
        const double p1 = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        data.labels[i] = rng.uniform01() < p1 ? 1 : 0;
    }
    return data;
}

LabeledDataset make_gaussian_mixture(Eigen::Index n, int class_count, double radius,
                                     double noise_sd, RngStream& rng) {
    if (n < 1) throw ValidationError("make_gaussian_mixture needs n >= 1");
    if (class_count < 2) throw ValidationError("make_gaussian_mixture needs >= 2 classes");
    if (!(radius > 0.0) || !(noise_sd > 0.0))
        throw ValidationError("make_gaussian_mixture needs positive radius and noise");
    LabeledDataset data;
    data.features.resize(n, 2);
    data.labels.resize(n);
    data.class_count = class_count;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % class_count);
        const double angle = 2.0 * M_PI * static_cast<double>(k) / class_count;
        data.features(i, 0) = radius * std::cos(angle) + noise_sd * rng.normal();
        data.features(i, 1) = radius * std::sin(angle) + noise_sd * rng.normal();
        data.labels[i] = k;
    }
    return data;
}

Eigen::MatrixXd sample_standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                              RngStream& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace epimi
