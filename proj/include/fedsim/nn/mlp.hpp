#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/nn/param_vector.hpp"

namespace fedsim::nn {

enum class Activation { relu, sigmoid, tanh, identity };
enum class OutputHead { softmax_xent, linear };

// Dense network shape: layer_sizes = (input, hidden..., output), one
// activation shared by all hidden layers, plus the output head.
struct MlpSpec {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::relu;
    OutputHead output_head = OutputHead::softmax_xent;

    void validate() const;
    Layout layout() const;
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
};

// A training batch viewed over caller-owned storage. `labels` feeds the
// softmax_xent head, `targets` (count x output_dim, row-major) the linear
// head; only the field matching the head is read.
struct Batch {
    std::size_t count = 0;
    std::size_t feature_dim = 0;
    std::span<const double> features;  // count x feature_dim, row-major
    std::span<const int> labels;
    std::span<const double> targets;
};

// Forward pass. With the softmax_xent head the result is a probability
// vector; with the linear head it is the raw affine output.
std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input);

// Intermediate activations kept for backpropagation. `hidden[l]` is the
// post-activation of hidden layer l; `output` is the last layer's affine
// output (pre-head).
struct Trace {
    std::vector<std::vector<double>> hidden;
    std::vector<double> output;
};

Trace forward_trace(const MlpSpec& spec, const ParamVector& params,
                    std::span<const double> input);

// Backpropagates `output_grad` (the loss gradient at the affine output)
// through one traced sample, accumulating into `grad_accum`. When
// `input_grad` is non-null the gradient w.r.t. the input is added to it;
// the DDPG actor update chains through the critic input this way.
void backprop_sample(const MlpSpec& spec, const ParamVector& params,
                     std::span<const double> input, const Trace& trace,
                     std::span<const double> output_grad, GradVector& grad_accum,
                     std::vector<double>* input_grad = nullptr);

// Gradient of the mean per-sample loss over the batch, with that loss.
// softmax_xent: cross entropy of the true label; linear: 0.5*||y-out||^2.
struct BackwardResult {
    GradVector grad;
    double mean_loss = 0.0;
};

BackwardResult backward(const MlpSpec& spec, const ParamVector& params, const Batch& batch);

// Per-sample loss of the already-computed forward output under the head.
double head_loss(const MlpSpec& spec, std::span<const double> forward_output,
                 const Batch& batch, std::size_t sample);

// theta - alpha * grad; the inputs are untouched.
ParamVector sgd_step(const ParamVector& params, const GradVector& grad, double alpha);

// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero,
// fully determined by the seed.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

}  // namespace fedsim::nn
