#include "fedsim/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::data {

void Dataset::validate() const {
    if (features.size() != num_samples * feature_dim) {
        throw InputError("Dataset: feature matrix size does not match num_samples x feature_dim");
    }
    if (labels.size() != num_samples) {
        throw InputError("Dataset: label count does not match sample count");
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
            throw InputError("Dataset: label " + std::to_string(l) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        }
    }
}

Dataset generate_synthetic(std::size_t num_classes, std::size_t samples_per_class,
                           std::size_t feature_dim, double class_separation,
                           std::uint64_t seed) {
    if (num_classes < 1 || samples_per_class < 1 || feature_dim < 1) {
        throw InputError("generate_synthetic: all counts must be >= 1");
    }
    if (!(class_separation > 0.0)) {
        throw InputError("generate_synthetic: class_separation must be > 0");
    }

    Dataset out;
    out.num_samples = num_classes * samples_per_class;
    out.feature_dim = feature_dim;
    out.num_classes = num_classes;
    out.features.resize(out.num_samples * feature_dim);
    out.labels.resize(out.num_samples);

    // Class c's mean sits on axis (c mod dim) at multiple (1 + c/dim) of the
    // separation, so every pair of means is at distance >= class_separation.
    auto mean_of = [&](std::size_t c, std::size_t d) {
        if (d != c % feature_dim) return 0.0;
        return class_separation * (1.0 + static_cast<double>(c / feature_dim));
    };

    Rng rng(mix_seed(seed, 0x73796e74));
    std::size_t row = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t s = 0; s < samples_per_class; ++s, ++row) {
            out.labels[row] = static_cast<int>(c);
            double* f = out.features.data() + row * feature_dim;
            for (std::size_t d = 0; d < feature_dim; ++d) {
                f[d] = mean_of(c, d) + rng.normal();
            }
        }
    }

    // Per-dimension affine rescale to [0,1].
    for (std::size_t d = 0; d < feature_dim; ++d) {
        double lo = out.features[d], hi = out.features[d];
        for (std::size_t i = 1; i < out.num_samples; ++i) {
            double v = out.features[i * feature_dim + d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double span = hi - lo;
        for (std::size_t i = 0; i < out.num_samples; ++i) {
            double& v = out.features[i * feature_dim + d];
            v = span > 0.0 ? (v - lo) / span : 0.5;
        }
    }
    return out;
}

std::vector<ClientDataset> partition_iid(const Dataset& dataset, std::size_t num_clients,
                                         std::uint64_t seed) {
    if (num_clients < 1) throw InputError("partition_iid: num_clients must be >= 1");
    if (num_clients > dataset.num_samples) {
        throw InputError("partition_iid: more clients than samples");
    }

    std::vector<std::size_t> order(dataset.num_samples);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x69696401));
    rng.shuffle(order);

    const std::size_t per_client = dataset.num_samples / num_clients;
    std::vector<ClientDataset> clients(num_clients);
    for (std::size_t c = 0; c < num_clients; ++c) {
        clients[c].client_id = c;
        clients[c].indices.assign(order.begin() + static_cast<std::ptrdiff_t>(c * per_client),
                                  order.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_client));
    }
    return clients;
}

std::vector<ClientDataset> partition_noniid(const Dataset& dataset, const PartitionPlan& plan) {
    if (plan.scheme != PartitionScheme::noniid_shards) {
        throw InputError("partition_noniid: plan scheme is not noniid_shards");
    }
    if (plan.num_clients < 1 || plan.shard_count < 1 || plan.shard_size < 1 ||
        plan.shards_per_client < 1) {
        throw InputError("partition_noniid: plan counts must be >= 1");
    }
    if (plan.shard_count * plan.shard_size > dataset.num_samples) {
        throw InputError("partition_noniid: shard_count x shard_size exceeds dataset size");
    }
    if (plan.shards_per_client * plan.num_clients != plan.shard_count) {
        throw InputError("partition_noniid: shards_per_client x num_clients != shard_count");
    }

    // Stable sort keeps original order within a label.
    std::vector<std::size_t> order(dataset.num_samples);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dataset.labels[a] < dataset.labels[b];
    });

    std::vector<std::size_t> shard_order(plan.shard_count);
    std::iota(shard_order.begin(), shard_order.end(), 0);
    Rng rng(mix_seed(plan.seed, 0x73686472));
    rng.shuffle(shard_order);

    std::vector<ClientDataset> clients(plan.num_clients);
    for (std::size_t c = 0; c < plan.num_clients; ++c) {
        clients[c].client_id = c;
        clients[c].indices.reserve(plan.shards_per_client * plan.shard_size);
        for (std::size_t s = 0; s < plan.shards_per_client; ++s) {
            std::size_t shard = shard_order[c * plan.shards_per_client + s];
            std::size_t begin = shard * plan.shard_size;
            for (std::size_t i = 0; i < plan.shard_size; ++i) {
                clients[c].indices.push_back(order[begin + i]);
            }
        }
    }
    return clients;
}

}  // namespace fedsim::data
