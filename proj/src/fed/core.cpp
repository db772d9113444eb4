#include "fedsim/fed/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::fed {

void FlConfig::validate() const {
    if (!(client_fraction >= 0.0 && client_fraction <= 1.0)) {
        throw InputError("FlConfig: client_fraction must be in [0,1]");
    }
    if (num_clients < 1) throw InputError("FlConfig: num_clients must be >= 1");
    if (batch_size < 1) throw InputError("FlConfig: batch_size must be >= 1");
    if (local_epochs < 1) throw InputError("FlConfig: local_epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InputError("FlConfig: learning_rate must be > 0");
    if (max_rounds < 1) throw InputError("FlConfig: max_rounds must be >= 1");
    if (target_accuracy != 0.0 && !(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
        throw InputError("FlConfig: target_accuracy must be in (0,1]");
    }
}

std::size_t selection_count(double client_fraction, std::size_t num_clients) {
    if (num_clients < 1) throw InputError("selection_count: num_clients must be >= 1");
    if (!(client_fraction >= 0.0 && client_fraction <= 1.0)) {
        throw InputError("selection_count: client_fraction must be in [0,1]");
    }
    auto n = static_cast<std::size_t>(client_fraction * static_cast<double>(num_clients));
    return std::clamp<std::size_t>(n, 1, num_clients);
}

namespace {

// Copies the listed samples into contiguous batch storage; `targets` gets
// one-hot rows when the head is linear.
struct BatchScratch {
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<double> targets;

    nn::Batch fill(const nn::MlpSpec& spec, const data::Dataset& dataset,
                   std::span<const std::size_t> indices) {
        const std::size_t dim = dataset.feature_dim;
        const std::size_t out_dim = spec.output_dim();
        features.resize(indices.size() * dim);
        labels.resize(indices.size());
        for (std::size_t s = 0; s < indices.size(); ++s) {
            auto row = dataset.sample(indices[s]);
            std::copy(row.begin(), row.end(), features.begin() + static_cast<std::ptrdiff_t>(s * dim));
            labels[s] = dataset.labels[indices[s]];
        }
        nn::Batch batch;
        batch.count = indices.size();
        batch.feature_dim = dim;
        batch.features = features;
        batch.labels = labels;
        if (spec.output_head == nn::OutputHead::linear) {
            targets.assign(indices.size() * out_dim, 0.0);
            for (std::size_t s = 0; s < indices.size(); ++s) {
                targets[s * out_dim + static_cast<std::size_t>(labels[s])] = 1.0;
            }
            batch.targets = targets;
        }
        return batch;
    }
};

}  // namespace

double local_loss(const nn::MlpSpec& spec, const nn::ParamVector& params,
                  const data::Dataset& dataset, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw InputError("local_loss: empty index set");
    BatchScratch scratch;
    nn::Batch batch = scratch.fill(spec, dataset, indices);
    double sum = 0.0;
    for (std::size_t s = 0; s < batch.count; ++s) {
        auto out = nn::forward(spec, params,
                               batch.features.subspan(s * batch.feature_dim, batch.feature_dim));
        sum += nn::head_loss(spec, out, batch, s);
    }
    return sum / static_cast<double>(batch.count);
}

ClientUpdateResult client_update(const nn::MlpSpec& spec, const nn::ParamVector& global,
                                 const data::Dataset& dataset, const data::ClientDataset& client,
                                 std::size_t epochs, std::size_t batch_size, double learning_rate,
                                 std::uint64_t seed) {
    if (client.indices.empty()) throw InputError("client_update: empty client dataset");
    if (epochs < 1) throw InputError("client_update: epochs must be >= 1");
    if (batch_size < 1) throw InputError("client_update: batch_size must be >= 1");
    if (learning_rate < 0.0) throw InputError("client_update: learning_rate must be >= 0");

    ClientUpdateResult result;
    result.client_id = client.client_id;
    result.samples_used = client.indices.size();
    result.local_loss_before = local_loss(spec, global, dataset, client.indices);

    nn::ParamVector params = global;
    std::vector<std::size_t> order = client.indices;
    BatchScratch scratch;
    const std::size_t n = order.size();
    const std::size_t step = std::min(batch_size, n);

    // learning_rate 0 keeps the model fixed (zero step size).
    for (std::size_t epoch = 0; learning_rate > 0.0 && epoch < epochs; ++epoch) {
        Rng rng(mix_seed(seed, epoch, 0x636c6965));
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < n; begin += step) {
            std::size_t end = std::min(begin + step, n);
            nn::Batch batch = scratch.fill(spec, dataset,
                                           std::span<const std::size_t>(order).subspan(begin, end - begin));
            auto bw = nn::backward(spec, params, batch);
            params = nn::sgd_step(params, bw.grad, learning_rate);
        }
    }

    result.local_loss_after = local_loss(spec, params, dataset, client.indices);
    result.new_params = std::move(params);
    return result;
}

nn::ParamVector aggregate(const AggregationRule& rule, const nn::ParamVector& global,
                          const std::vector<ClientUpdateResult>& results) {
    if (results.empty()) throw InputError("aggregate: no client results");
    for (const auto& r : results) {
        nn::require_same_layout(global, r.new_params, "aggregate");
        if (r.samples_used == 0) throw InputError("aggregate: client with zero samples");
    }

    std::vector<const ClientUpdateResult*> ordered;
    ordered.reserve(results.size());
    for (const auto& r : results) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

    double total_samples = 0.0;
    for (const auto* r : ordered) total_samples += static_cast<double>(r->samples_used);

    if (rule.kind == AggregationKind::weighted_average) {
        nn::ParamVector out{global.layout};
        for (const auto* r : ordered) {
            double w = static_cast<double>(r->samples_used) / total_samples;
            nn::add_scaled_in_place(out, r->new_params, w);
        }
        return out;
    }

    if (!(rule.alpha > 0.0)) throw InputError("aggregate: gradient_step needs alpha > 0");
    // Recover each client's (pseudo-)gradient and take the aggregated step.
    nn::GradVector mean_grad{global.layout};
    for (const auto* r : ordered) {
        double w = static_cast<double>(r->samples_used) / total_samples;
        for (std::size_t i = 0; i < mean_grad.values.size(); ++i) {
            double g = (global.values[i] - r->new_params.values[i]) / rule.alpha;
            mean_grad.values[i] += w * g;
        }
    }
    return nn::sgd_step(global, mean_grad, rule.alpha);
}

EvalResult evaluate(const nn::MlpSpec& spec, const nn::ParamVector& params,
                    const data::Dataset& dataset) {
    if (dataset.num_samples == 0) throw InputError("evaluate: empty dataset");
    BatchScratch scratch;
    std::vector<std::size_t> all(dataset.num_samples);
    std::iota(all.begin(), all.end(), 0);
    nn::Batch batch = scratch.fill(spec, dataset, all);

    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batch.count; ++s) {
        auto out = nn::forward(spec, params,
                               batch.features.subspan(s * batch.feature_dim, batch.feature_dim));
        // max_element returns the first maximum: ties go to the lowest id.
        auto argmax = static_cast<int>(
            std::distance(out.begin(), std::max_element(out.begin(), out.end())));
        if (argmax == batch.labels[s]) ++correct;
        loss_sum += nn::head_loss(spec, out, batch, s);
    }
    return {static_cast<double>(correct) / static_cast<double>(batch.count),
            loss_sum / static_cast<double>(batch.count)};
}

}  // namespace fedsim::fed
