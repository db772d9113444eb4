#include "fedsim/nn/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim::nn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InputError("loss: weight/sample dimension mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_sign_label(double y) {
    if (y != 1.0 && y != -1.0) {
        throw InputError("loss: label must be -1 or +1, got " + std::to_string(y));
    }
}

}  // namespace

double linear_regression_loss(std::span<const double> w, std::span<const double> x, double y) {
    double r = y - dot(w, x);
    return 0.5 * r * r;
}

double logistic_loss(std::span<const double> w, std::span<const double> x, double y) {
    check_sign_label(y);
    double m = y * dot(w, x);
    // log1p(exp(-m)) computed without overflow for large |m|
    if (m < -30.0) return -m;
    return std::log1p(std::exp(-m));
}

double smooth_svm_loss(std::span<const double> w, std::span<const double> x, double y) {
    check_sign_label(y);
    double m = y * dot(w, x);
    return 0.5 * std::max(0.0, 1.0 - m);
}

double kmeans_loss(const std::vector<std::vector<double>>& centroids, std::span<const double> x) {
    if (centroids.empty()) throw InputError("kmeans_loss: need at least one centroid");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centroids) {
        if (c.size() != x.size()) {
            throw InputError("kmeans_loss: centroid/sample dimension mismatch");
        }
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            double d = x[i] - c[i];
            d2 += d * d;
        }
        best = std::min(best, d2);
    }
    return 0.5 * best;
}

double neural_network_loss(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size()) {
        throw InputError("neural_network_loss: prediction/target dimension mismatch");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        double d = target[i] - prediction[i];
        d2 += d * d;
    }
    return 0.5 * std::sqrt(d2);
}

double loss(LossKind kind, const LossInput& input) {
    switch (kind) {
        case LossKind::linear_regression:
            return linear_regression_loss(input.weights, input.features, input.label);
        case LossKind::logistic_regression:
            return logistic_loss(input.weights, input.features, input.label);
        case LossKind::smooth_svm:
            return smooth_svm_loss(input.weights, input.features, input.label);
        case LossKind::kmeans:
            return kmeans_loss(input.centroids, input.features);
        case LossKind::neural_network:
            return neural_network_loss(input.prediction, input.target);
    }
    throw InputError("loss: unknown kind");
}

}  // namespace fedsim::nn
