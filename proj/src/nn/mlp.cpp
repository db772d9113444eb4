#include "fedsim/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::nn {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::tanh: return std::tanh(z);
        case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the post-activation value.
double activate_grad(Activation a, double out) {
    switch (a) {
        case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return out * (1.0 - out);
        case Activation::tanh: return 1.0 - out * out;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

// out[j] = sum_i in[i] * W[i,j] + b[j], weights row-major by input index.
void affine(std::span<const double> in, const double* weights, const double* bias,
            std::size_t fan_in, std::size_t fan_out, std::vector<double>& out) {
    out.assign(bias, bias + fan_out);
    for (std::size_t i = 0; i < fan_in; ++i) {
        double x = in[i];
        if (x == 0.0) continue;
        const double* row = weights + i * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) out[j] += x * row[j];
    }
}

void softmax_in_place(std::vector<double>& z) {
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (auto& v : z) v /= sum;
}

double log_sum_exp(std::span<const double> z) {
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum);
}

void check_input(const MlpSpec& spec, const ParamVector& params, std::span<const double> input) {
    if (input.size() != spec.input_dim()) {
        throw LayoutError("forward: input length " + std::to_string(input.size()) +
                          " does not match input layer size " + std::to_string(spec.input_dim()));
    }
    if (params.layout != spec.layout()) {
        throw LayoutError("forward: parameter layout does not match spec");
    }
}

}  // namespace

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw InputError("MlpSpec: need at least input and output layers");
    for (std::size_t s : layer_sizes) {
        if (s < 1) throw InputError("MlpSpec: all layer sizes must be >= 1");
    }
}

Layout MlpSpec::layout() const {
    Layout out;
    out.reserve(layer_sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        out.push_back({static_cast<std::uint32_t>(layer_sizes[l]),
                       static_cast<std::uint32_t>(layer_sizes[l + 1])});
    }
    return out;
}

Trace forward_trace(const MlpSpec& spec, const ParamVector& params,
                    std::span<const double> input) {
    check_input(spec, params, input);
    const std::size_t num_layers = spec.layer_sizes.size() - 1;
    Trace trace;
    trace.hidden.resize(num_layers - 1);

    std::span<const double> cur = input;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const double* w = params.values.data() + params.weight_offset(l);
        const double* b = w + fan_in * fan_out;
        std::vector<double>& dst = (l + 1 < num_layers) ? trace.hidden[l] : trace.output;
        affine(cur, w, b, fan_in, fan_out, dst);
        if (l + 1 < num_layers) {
            for (auto& v : dst) v = activate(spec.activation, v);
            cur = dst;
        }
    }
    return trace;
}

std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input) {
    Trace trace = forward_trace(spec, params, input);
    std::vector<double> out = std::move(trace.output);
    if (spec.output_head == OutputHead::softmax_xent) softmax_in_place(out);
    return out;
}

void backprop_sample(const MlpSpec& spec, const ParamVector& params,
                     std::span<const double> input, const Trace& trace,
                     std::span<const double> output_grad, GradVector& grad_accum,
                     std::vector<double>* input_grad) {
    if (grad_accum.layout != spec.layout()) {
        throw LayoutError("backprop_sample: gradient layout does not match spec");
    }
    const std::size_t num_layers = spec.layer_sizes.size() - 1;
    std::vector<double> delta(output_grad.begin(), output_grad.end());
    std::vector<double> delta_prev;

    for (std::size_t l = num_layers; l-- > 0;) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const std::size_t w_off = params.weight_offset(l);
        const double* w = params.values.data() + w_off;
        std::span<const double> in =
            (l == 0) ? input : std::span<const double>(trace.hidden[l - 1]);

        double* gw = grad_accum.values.data() + w_off;
        double* gb = gw + fan_in * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) gb[j] += delta[j];
        for (std::size_t i = 0; i < fan_in; ++i) {
            double x = in[i];
            if (x == 0.0) continue;
            double* grow = gw + i * fan_out;
            for (std::size_t j = 0; j < fan_out; ++j) grow[j] += x * delta[j];
        }

        const bool need_input_grad = (l > 0) || (input_grad != nullptr);
        if (!need_input_grad) break;

        delta_prev.assign(fan_in, 0.0);
        for (std::size_t i = 0; i < fan_in; ++i) {
            const double* row = w + i * fan_out;
            double acc = 0.0;
            for (std::size_t j = 0; j < fan_out; ++j) acc += row[j] * delta[j];
            delta_prev[i] = acc;
        }
        if (l > 0) {
            const std::vector<double>& act = trace.hidden[l - 1];
            for (std::size_t i = 0; i < fan_in; ++i) {
                delta_prev[i] *= activate_grad(spec.activation, act[i]);
            }
        } else {
            for (std::size_t i = 0; i < fan_in; ++i) (*input_grad)[i] += delta_prev[i];
            break;
        }
        delta.swap(delta_prev);
    }
}

double head_loss(const MlpSpec& spec, std::span<const double> forward_output,
                 const Batch& batch, std::size_t sample) {
    const std::size_t out_dim = spec.output_dim();
    if (spec.output_head == OutputHead::softmax_xent) {
        int label = batch.labels[sample];
        if (label < 0 || static_cast<std::size_t>(label) >= out_dim) {
            throw InputError("head_loss: label " + std::to_string(label) + " out of range");
        }
        // forward_output is already a probability vector here.
        double p = std::max(forward_output[static_cast<std::size_t>(label)], 1e-300);
        return -std::log(p);
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < out_dim; ++j) {
        double d = forward_output[j] - batch.targets[sample * out_dim + j];
        loss += 0.5 * d * d;
    }
    return loss;
}

BackwardResult backward(const MlpSpec& spec, const ParamVector& params, const Batch& batch) {
    if (batch.count == 0) throw InputError("backward: empty batch");
    if (batch.feature_dim != spec.input_dim()) {
        throw LayoutError("backward: batch feature_dim does not match input layer");
    }
    const std::size_t out_dim = spec.output_dim();

    BackwardResult result{GradVector{spec.layout()}, 0.0};
    std::vector<double> out_grad(out_dim);

    for (std::size_t s = 0; s < batch.count; ++s) {
        std::span<const double> x = batch.features.subspan(s * batch.feature_dim,
                                                           batch.feature_dim);
        Trace trace = forward_trace(spec, params, x);
        if (spec.output_head == OutputHead::softmax_xent) {
            int label = batch.labels[s];
            if (label < 0 || static_cast<std::size_t>(label) >= out_dim) {
                throw InputError("backward: label " + std::to_string(label) + " out of range");
            }
            double lse = log_sum_exp(trace.output);
            result.mean_loss += lse - trace.output[static_cast<std::size_t>(label)];
            // dLoss/dz = softmax(z) - onehot(label)
            double zmax = *std::max_element(trace.output.begin(), trace.output.end());
            double sum = 0.0;
            for (std::size_t j = 0; j < out_dim; ++j) {
                out_grad[j] = std::exp(trace.output[j] - zmax);
                sum += out_grad[j];
            }
            for (std::size_t j = 0; j < out_dim; ++j) out_grad[j] /= sum;
            out_grad[static_cast<std::size_t>(label)] -= 1.0;
        } else {
            for (std::size_t j = 0; j < out_dim; ++j) {
                double d = trace.output[j] - batch.targets[s * out_dim + j];
                out_grad[j] = d;
                result.mean_loss += 0.5 * d * d;
            }
        }
        backprop_sample(spec, params, x, trace, out_grad, result.grad);
    }

    const double inv = 1.0 / static_cast<double>(batch.count);
    for (auto& g : result.grad.values) g *= inv;
    result.mean_loss *= inv;
    return result;
}

ParamVector sgd_step(const ParamVector& params, const GradVector& grad, double alpha) {
    require_same_layout(params, grad, "sgd_step");
    if (!(alpha > 0.0)) throw InputError("sgd_step: learning rate must be > 0");
    ParamVector out = params;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] -= alpha * grad.values[i];
    }
    return out;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector out{spec.layout()};
    Rng rng(mix_seed(seed, 0x6d6c7000));
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        double* w = out.values.data() + out.weight_offset(l);
        for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
            w[i] = rng.uniform(-bound, bound);
        }
        // biases stay zero
    }
    return out;
}

}  // namespace fedsim::nn
