#pragma once

#include <span>
#include <vector>

namespace fedsim::nn {

// Per-sample loss catalog for the classic model families. The MLP trainer
// does not go through these; they are standalone evaluators (the k-means
// and SVM rows have no dedicated trainer here).
enum class LossKind {
    linear_regression,
    logistic_regression,
    smooth_svm,
    kmeans,
    neural_network,
};

// 0.5 * (y - w.x)^2
double linear_regression_loss(std::span<const double> w, std::span<const double> x, double y);

// log(1 + exp(-y * w.x)), y in {-1,+1}
double logistic_loss(std::span<const double> w, std::span<const double> x, double y);

// 0.5 * max{0, 1 - y * w.x}, y in {-1,+1}
double smooth_svm_loss(std::span<const double> w, std::span<const double> x, double y);

// 0.5 * min_j ||x - c_j||^2 over K' >= 1 centroids
double kmeans_loss(const std::vector<std::vector<double>>& centroids, std::span<const double> x);

// 0.5 * ||target - prediction|| of an already-evaluated network output
double neural_network_loss(std::span<const double> prediction, std::span<const double> target);

// Context for the kind-dispatched entry point; only the fields the kind
// needs are read.
struct LossInput {
    std::vector<double> weights;
    std::vector<std::vector<double>> centroids;
    std::vector<double> prediction;
    std::vector<double> features;
    std::vector<double> target;
    double label = 0.0;
};

double loss(LossKind kind, const LossInput& input);

}  // namespace fedsim::nn
