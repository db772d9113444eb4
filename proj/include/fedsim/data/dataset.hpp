#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedsim::data {

// Sample pool shared by all clients. Features are row-major and normalized
// to [0,1]; labels are class ids in [0, num_classes).
struct Dataset {
    std::size_t num_samples = 0;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;  // num_samples x feature_dim
    std::vector<int> labels;

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }

    void validate() const;
};

// One device's local view: unique sample indices into the shared Dataset.
struct ClientDataset {
    std::size_t client_id = 0;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
};

enum class PartitionScheme { iid, noniid_shards };

struct PartitionPlan {
    PartitionScheme scheme = PartitionScheme::iid;
    std::size_t num_clients = 1;
    // noniid_shards only: sort-by-label, cut into shard_count shards of
    // shard_size, deal shards_per_client to each client.
    std::size_t shard_count = 0;
    std::size_t shard_size = 0;
    std::size_t shards_per_client = 0;
    std::uint64_t seed = 0;
};

// Gaussian blobs with per-class means at pairwise distance >= class_separation
// and unit within-class variance, affinely rescaled per dimension to [0,1].
// Samples are emitted class-major (all of class 0 first).
Dataset generate_synthetic(std::size_t num_classes, std::size_t samples_per_class,
                           std::size_t feature_dim, double class_separation,
                           std::uint64_t seed);

// Shuffle by seed, split evenly; a remainder smaller than num_clients is
// dropped so all clients stay the same size.
std::vector<ClientDataset> partition_iid(const Dataset& dataset, std::size_t num_clients,
                                         std::uint64_t seed);

std::vector<ClientDataset> partition_noniid(const Dataset& dataset, const PartitionPlan& plan);

}  // namespace fedsim::data
