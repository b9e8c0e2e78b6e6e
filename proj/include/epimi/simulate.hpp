#pragma once

#include "epimi/core.hpp"
#include "epimi/models.hpp"
#include "epimi/rng.hpp"

namespace epimi {

// n points of the 1-d logistic benchmark: x ~ N(0, 1) and
// P(y = 1 | x) = sigmoid(theta0[0] + theta0[1] * x).
LabeledDataset make_logistic_data(Eigen::Index n, const Eigen::Vector2d& theta0, RngStream& rng);

// Balanced K-class mixture in the plane: class means sit on a circle of the
// given radius and points scatter around them with isotropic noise.  Labels
// cycle 0, 1, ..., K-1, 0, ... so every prefix is near-balanced.
LabeledDataset make_gaussian_mixture(Eigen::Index n, int class_count, double radius,
                                     double noise_sd, RngStream& rng);

Eigen::MatrixXd sample_standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                              RngStream& rng);

}  // namespace epimi
